#pragma once

#include <optional>
#include <utility>

#include "advsel/metrics.hpp"

namespace advsel {

enum class Direction { forward, backward };
enum class GMeasure { accuracy, tp_at_fp };

/// Distance/constraint/solver bundle used to simulate attacks during
/// selection; the box and grid derive from the masked dataset's domains.
struct AttackSpec {
    DistanceKind kind = DistanceKind::l2_squared;
    bool monotone_increase = false;
    SolverParams params;
};

struct SelectionConfig {
    Direction direction = Direction::forward;
    std::size_t m = 1;                  // target subset size
    double lambda = 0.0;                // security trade-off weight
    int folds = 5;
    std::optional<FoldPlan> fold_plan;  // built from (folds, seed) when absent
    std::vector<TrainConfig> train_grid;
    AttackSpec attack;
    GMeasure g_measure = GMeasure::accuracy;
    double fp_rate = 0.01;              // only for g_measure == tp_at_fp
    std::uint64_t seed = 0;
    bool compute_security = true;       // false skips attack simulation (lambda = 0 path)
    /// Return the best-scoring forward prefix instead of the full-size mask
    /// (the subset-size <= m variant).
    bool best_prefix_by_objective = false;
    int jobs = 1;
};

struct CandidateRecord {
    std::size_t iteration;
    std::size_t feature;  // candidate feature index in the original space
    double G;
    double S;             // NaN when security was not evaluated
    double lambda_prime;
    bool chosen;
};

struct SelectionTrace {
    std::vector<CandidateRecord> records;
    FeatureMask final_mask;
};

/// Cross-validated estimate of (G, S) for one candidate mask: per fold,
/// train with the inner grid search on the training folds and score the
/// validation fold; S averages hardness of evasion over validation
/// malicious samples (NaN when security evaluation is off).
std::pair<double, double> evaluate_candidate(const Dataset& ds, const FeatureMask& mask,
                                             const SelectionConfig& cfg, const FoldPlan& plan);

/// Greedy wrapper selection maximizing G + lambda' * S with the per-
/// iteration rescaling lambda' = lambda / max_k S_k; forward selection
/// grows from the empty set, backward elimination shrinks from the full
/// set. Deterministic; argmax ties go to the lowest feature index.
std::pair<FeatureMask, SelectionTrace> wafs(const Dataset& ds, const SelectionConfig& cfg);

/// The lambda = 0 baseline; identical to wafs with the security term
/// disabled (no attack simulation).
std::pair<FeatureMask, SelectionTrace> traditional_wrapper(const Dataset& ds, SelectionConfig cfg);

void save_trace_csv(const SelectionTrace& trace, const std::string& path);
void save_mask_json(const FeatureMask& mask, const std::vector<std::string>& feature_names,
                    const std::string& path);
FeatureMask load_mask_json(const std::string& path);

}  // namespace advsel
