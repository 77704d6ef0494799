#pragma once

#include <optional>
#include <vector>

#include "advsel/svm.hpp"

namespace advsel {

enum class DistanceKind { l1, l2_squared };

double distance(DistanceKind kind, std::span<const double> a, std::span<const double> b);
std::vector<double> distance_subgradient(DistanceKind kind, std::span<const double> a,
                                         std::span<const double> b);

/// Reported/budgeted cost in the distance's natural units: l1 as-is,
/// l2_squared as the Euclidean distance.
inline double natural_cost(DistanceKind kind, double raw) {
    return kind == DistanceKind::l2_squared ? std::sqrt(raw) : raw;
}

/// Feasible region for manipulated samples: per-feature box, optional
/// monotone-increase rule (x <= x'), and the grid for discrete features.
struct ConstraintSet {
    std::vector<double> lo, hi;
    bool monotone_increase = false;
    std::vector<std::vector<double>> grids;  // empty per-feature vector = continuous

    static ConstraintSet from_domains(const std::vector<FeatureDomain>& domains, bool monotone);

    std::size_t dim() const { return lo.size(); }
    bool all_discrete() const;

    /// Componentwise clip to the box, then max with the origin when the
    /// monotone rule is active.
    void project(std::vector<double>& x, std::span<const double> origin) const;
    bool satisfied(std::span<const double> x, std::span<const double> origin,
                   double tol = 1e-9) const;

    /// Largest attainable distance from `origin` inside the feasible set
    /// (raw units); caps the security contribution of unevadable samples.
    double max_feasible_distance(DistanceKind kind, std::span<const double> origin) const;
};

struct SolverParams {
    double step_size = 0.01;
    double epsilon = 1e-6;           // |cost delta| convergence threshold
    long max_iters = 1000;
    int top_k = 10;                  // discrete candidate features per step
    double margin_overshoot = 1e-6;  // aim slightly past g = 0
    bool backtrack = true;           // halve a step that worsens the phase objective
    int max_backtracks = 30;
    bool record_trajectory = false;
};

enum class InitKind { self, nearest_legit, none };

struct TracePoint {
    double cost;  // raw units
    double g;
    int phase;  // 0: descending g, 1: descending cost
};

struct EvasionResult {
    std::vector<double> x_star;
    double cost = 0.0;  // raw units, equals distance(kind, x_star, x)
    double g_value = 0.0;
    bool evaded = false;
    InitKind init_used = InitKind::none;
    long iterations = 0;
    std::vector<TracePoint> trajectory;
};

/// Analytic minimum-l2 evasion point against a linear model, clipped to the
/// box when one is given. Requires g(x) >= 0; callers fall back to the
/// iterative solver if clipping pushes the point back to g >= 0.
std::vector<double> closed_form_linear_l2(const LinearModel& m, std::span<const double> x,
                                          double overshoot, const ConstraintSet* constraints = nullptr);

/// Alternating-descent run from one starting point (toward the boundary
/// while detected, toward x once evading), projecting every step onto the
/// feasible set. Building block for min_cost_evasion.
EvasionResult descend_from(const TrainedModel& m, std::span<const double> x,
                           std::span<const double> x0, InitKind init, DistanceKind kind,
                           const ConstraintSet& constraints, const SolverParams& params);

/// Minimum-cost evasion of a continuous feature space: one descent from x
/// itself and one from the nearest legitimate-classified pool point; the
/// best feasible g < 0 point across both runs is returned.
EvasionResult min_cost_evasion(const TrainedModel& m, std::span<const double> x, DistanceKind kind,
                               const ConstraintSet& constraints, const SolverParams& params,
                               const Matrix* neighbor_pool = nullptr);

/// Grid-space variant: each step perturbs one of the top_k features ranked
/// by |gradient| one level in the descent direction and keeps the best
/// strictly-improving candidate.
EvasionResult discrete_min_cost_evasion(const TrainedModel& m, std::span<const double> x,
                                        DistanceKind kind, const ConstraintSet& constraints,
                                        const SolverParams& params);

/// One point of the descent path recorded for budget sweeps.
struct FrontierPoint {
    std::vector<double> x;
    double cost = 0.0;  // natural units
    double g = 0.0;
};

/// Whole descent path of a budgeted attack; reusing it over a nested budget
/// sweep yields monotone curves without re-solving.
struct AttackFrontier {
    std::vector<FrontierPoint> points;  // points[0] is the unmodified sample

    /// Minimal-g point with cost <= budget (earliest on ties).
    const FrontierPoint& best_within(double budget) const;
};

/// Descend on g under a cost bound (natural units) plus the constraint set,
/// recording the whole path. Dispatches to grid search on discrete domains.
AttackFrontier budgeted_descent(const TrainedModel& m, std::span<const double> x, DistanceKind kind,
                                const ConstraintSet& constraints, const SolverParams& params,
                                double c_max);

/// Budget-bounded attack (minimize g subject to cost <= c_max); c_max = 0
/// returns the sample unchanged.
EvasionResult budgeted_attack(const TrainedModel& m, std::span<const double> x, DistanceKind kind,
                              const ConstraintSet& constraints, const SolverParams& params,
                              double c_max);

}  // namespace advsel
