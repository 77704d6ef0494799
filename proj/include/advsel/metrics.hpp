#pragma once

#include <string>
#include <vector>

#include "advsel/evasion.hpp"

namespace advsel {

/// Decision offset on g chosen so the false-positive rate on a calibration
/// set stays at or below a target.
struct OperatingPoint {
    double fp_rate = 0.01;
    double threshold = 0.0;  // malicious iff g(x) - threshold >= 0
};

/// Empirical hardness of evasion over a malicious set (natural cost units).
struct SecurityEstimate {
    double mean_cost = 0.0;
    std::vector<double> per_sample_costs;
    int unevaded_count = 0;

    double std_cost() const;
};

/// Fraction of samples with sign(g(x)) == y (sign(0) = +1).
double accuracy(const TrainedModel& m, const Dataset& ds);

/// Smallest threshold among the observed legitimate scores (or just above
/// the maximum) whose false-positive fraction is <= fp_rate.
OperatingPoint calibrate_threshold(std::vector<double> legit_scores, double fp_rate);
OperatingPoint calibrate_threshold(const TrainedModel& m, const Dataset& ds, double fp_rate);

/// TP rate of the malicious samples in ds at the given operating point.
double tp_at_fp(const TrainedModel& m, const Dataset& ds, const OperatingPoint& op);

struct HardnessOptions {
    double threshold = 0.0;           // attacks target g(x) - threshold
    const Matrix* legit_pool = nullptr;
    int jobs = 1;
    /// Use the analytic solution for linear models with l2 distance (falls
    /// back to the iterative solver when clipping breaks it).
    bool closed_form_fast_path = true;
};

/// Mean minimum evasion cost over malicious samples: already-evading
/// samples contribute 0 and unevadable ones the maximum feasible distance.
SecurityEstimate hardness_of_evasion(const TrainedModel& m, const Matrix& malicious,
                                     DistanceKind kind, const ConstraintSet& constraints,
                                     const SolverParams& params, const HardnessOptions& opts = {});

/// Evenness of a weight vector's absolute values in [0, 1]: 1 when all
/// |w_i| are equal, 0 when a single weight dominates.
double weight_evenness(std::span<const double> weights);

/// Pearson correlation; returns NaN on degenerate (zero-variance) input.
double pearson(std::span<const double> a, std::span<const double> b);

struct CorrelationReport {
    std::vector<double> hardness;  // S per model
    std::vector<double> evenness;  // E per model
    double pearson_r = 0.0;
    bool defined = false;
    std::string note;
};

/// Per-model (S, E) pairs and their correlation; purely descriptive.
CorrelationReport security_correlation_report(const std::vector<TrainedModel>& models,
                                              const std::vector<Matrix>& malicious_sets,
                                              DistanceKind kind, const ConstraintSet& constraints,
                                              const SolverParams& params, double threshold = 0.0);

}  // namespace advsel
