#pragma once

#include "advsel/selection.hpp"

namespace advsel {

enum class Knowledge { perfect, limited };

/// One security-evaluation setup: attacker knowledge, budget sweep, and
/// the attack machinery shared by every budget.
struct AttackScenario {
    Knowledge knowledge = Knowledge::perfect;
    std::size_t surrogate_size = 0;    // samples available to a limited-knowledge attacker
    std::uint64_t surrogate_seed = 0;
    std::vector<double> budgets;       // ascending, natural cost units, first >= 0
    double fp_rate = 0.01;
    DistanceKind kind = DistanceKind::l2_squared;
    bool monotone_increase = false;
    SolverParams params;
    int repeats = 1;
    int jobs = 1;

    void validate() const;
};

struct CurvePoint {
    double budget;
    double tp_mean;
    double tp_std;
    int n_repeats;
    bool degraded = false;  // > 10% of samples errored in some repeat
};

struct SecurityCurve {
    Knowledge knowledge = Knowledge::perfect;
    std::vector<CurvePoint> points;
    std::string model_descriptor;
    FeatureMask mask;
};

/// Attacker-side model: same learning algorithm and feature mask as the
/// true classifier, fit on the surrogate data only.
TrainedModel train_surrogate(const Dataset& surrogate_ds, const FeatureMask& mask,
                             const std::vector<TrainConfig>& grid, std::uint64_t seed);

/// One repeat of the budget sweep: every malicious test sample is attacked
/// against `attacker_model`, the per-iteration frontier is reused across
/// budgets, and TP at the calibrated operating point is evaluated under
/// `true_model`. The dataset must already be masked to the model's inputs.
SecurityCurve security_curve(const TrainedModel& true_model, const TrainedModel& attacker_model,
                             const Dataset& test_ds, const AttackScenario& scenario);

/// Mean/std aggregation of per-repeat curves over identical budget grids.
SecurityCurve aggregate_curves(const std::vector<SecurityCurve>& runs);

/// Per-subset-size summary used by selection comparisons.
struct SizeSummary {
    std::size_t subset_size;
    double g_mean = 0.0;  // accuracy without attack
    double s_mean = 0.0;  // hardness of evasion
};

struct CompareArm {
    std::string name;
    SecurityCurve curve;                       // aggregated over repeats
    std::vector<double> budget0_tp;            // per repeat
    std::vector<double> hardness;              // per repeat, at the final mask
    std::vector<FeatureMask> masks;            // per repeat
    std::vector<SelectionTrace> traces;        // per repeat
    std::vector<std::vector<double>> tp_by_repeat;  // [repeat][budget]
    std::vector<SizeSummary> size_summary;     // averaged over repeats
};

struct CompareReport {
    CompareArm adversarial;  // wafs with the configured lambda
    CompareArm traditional;  // lambda = 0 baseline
    std::vector<double> budgets;
    /// Paired t statistic per budget of (adversarial - traditional) TP.
    std::vector<double> t_statistic;
    int repeats = 0;
};

struct CompareOptions {
    double train_fraction = 0.5;  // of the non-surrogate samples
    std::uint64_t seed = 0;
    bool size_summaries = true;
};

/// Run both selection arms on fresh train/test splits per repeat, train
/// final models, sweep the budgets, and report paired results.
CompareReport compare_selectors(const Dataset& ds, const SelectionConfig& selection,
                                const AttackScenario& scenario, const CompareOptions& opts);

void save_curve_csv(const SecurityCurve& curve, const std::string& path);
void save_compare_csv(const CompareReport& report, const std::string& path);

}  // namespace advsel
