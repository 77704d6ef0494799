#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "advsel/dataset.hpp"

namespace advsel {

struct Kernel {
    enum class Kind { linear, rbf };
    Kind kind = Kind::linear;
    double gamma = 1.0;  // rbf only, > 0
};

double kernel_eval(const Kernel& k, std::span<const double> a, std::span<const double> b);

struct TrainConfig {
    double C = 1.0;
    Kernel kernel;
    double tolerance = 1e-3;        // KKT slack
    long max_passes = 10'000'000;   // SMO pair-update cap
};

struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;
    FeatureMask mask;
};

struct KernelModel {
    Matrix support_vectors;
    std::vector<double> dual_coeffs;  // alpha_i * y_i per support vector
    double bias = 0.0;
    Kernel kernel;
    FeatureMask mask;
};

/// A trained discriminant g(x); sign(g) >= 0 means malicious.
struct TrainedModel {
    std::variant<LinearModel, KernelModel> model;
    TrainConfig config;
    bool converged = true;

    bool is_linear() const { return std::holds_alternative<LinearModel>(model); }
    const LinearModel& linear() const { return std::get<LinearModel>(model); }
    const KernelModel& kernel_expansion() const { return std::get<KernelModel>(model); }
    std::size_t dim() const;
    const FeatureMask& mask() const;
};

/// Raw SMO output, exposed so the dual solution can be verified directly.
struct SmoResult {
    std::vector<double> alpha;
    double bias = 0.0;
    double dual_objective = 0.0;
    bool converged = true;
    long iterations = 0;
};

/// Soft-margin SVM dual solved by SMO with maximal-violating-pair working
/// set selection; deterministic, ties broken by lowest index.
SmoResult smo_solve(const Dataset& ds, const TrainConfig& cfg);

/// Train on a dataset whose columns correspond to `mask`. Linear kernels
/// are collapsed to an explicit weight vector.
TrainedModel train(const Dataset& ds, const TrainConfig& cfg, const FeatureMask& mask);
TrainedModel train(const Dataset& ds, const TrainConfig& cfg);

/// Same fit as train() but always kept in dual form, for either kernel.
KernelModel train_kernel_expansion(const Dataset& ds, const TrainConfig& cfg, const FeatureMask& mask);

double discriminant(const TrainedModel& m, std::span<const double> x);
double discriminant(const LinearModel& m, std::span<const double> x);
double discriminant(const KernelModel& m, std::span<const double> x);

std::vector<double> discriminant_gradient(const TrainedModel& m, std::span<const double> x);

/// sign(g) with sign(0) = +1.
inline int predicted_label(double g) { return g >= 0.0 ? +1 : -1; }

/// Copy of the model with `delta` added to the bias (used to attack a
/// thresholded decision rule g(x) - tau >= 0 as if it were g >= 0).
TrainedModel with_bias_shift(const TrainedModel& m, double delta);

/// Pick the grid entry with the best mean CV accuracy; ties prefer smaller
/// C, then smaller gamma. Cells whose training fails on every fold are
/// excluded; throws if none remain.
TrainConfig grid_search(const Dataset& ds, const std::vector<TrainConfig>& grid, const FoldPlan& folds);

void save_model(const TrainedModel& m, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace advsel
