#include "advsel/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace advsel {

double kernel_eval(const Kernel& k, std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b, "kernel_eval");
    if (k.kind == Kernel::Kind::linear) return dot(a, b);
    return std::exp(-k.gamma * squared_distance(a, b));
}

std::size_t TrainedModel::dim() const {
    return is_linear() ? linear().weights.size() : kernel_expansion().support_vectors.cols;
}

const FeatureMask& TrainedModel::mask() const {
    return is_linear() ? linear().mask : kernel_expansion().mask;
}

namespace {

void check_train_config(const TrainConfig& cfg) {
    if (!(cfg.C > 0.0)) throw std::invalid_argument("C must be positive");
    if (!(cfg.tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (cfg.kernel.kind == Kernel::Kind::rbf && !(cfg.kernel.gamma > 0.0))
        throw std::invalid_argument("rbf gamma must be positive");
    if (cfg.max_passes < 1) throw std::invalid_argument("max_passes must be >= 1");
}

// Full kernel matrix up to this many samples; above it rows are recomputed
// on demand. Either path performs the identical arithmetic per entry.
constexpr std::size_t kFullCacheLimit = 2048;

class KernelTable {
public:
    KernelTable(const Dataset& ds, const Kernel& k) : ds_(ds), kernel_(k) {
        if (ds.size() <= kFullCacheLimit) {
            full_ = Matrix(ds.size(), ds.size());
            for (std::size_t i = 0; i < ds.size(); ++i)
                for (std::size_t j = 0; j < ds.size(); ++j)
                    full_.at(i, j) = kernel_eval(kernel_, ds_.features.row(i), ds_.features.row(j));
        }
    }

    double at(std::size_t i, std::size_t j) const {
        if (full_.rows > 0) return full_.at(i, j);
        return kernel_eval(kernel_, ds_.features.row(i), ds_.features.row(j));
    }

private:
    const Dataset& ds_;
    Kernel kernel_;
    Matrix full_;
};

}  // namespace

SmoResult smo_solve(const Dataset& ds, const TrainConfig& cfg) {
    check_train_config(cfg);
    if (!ds.has_both_classes())
        throw std::invalid_argument("training requires samples from both classes");

    const std::size_t n = ds.size();
    const double C = cfg.C;
    const KernelTable K(ds, cfg.kernel);
    const auto& y = ds.labels;

    std::vector<double> alpha(n, 0.0);
    std::vector<double> G(n, 0.0);  // G_i = sum_j alpha_j y_j K_ij

    // Violation score v_i = y_i - G_i; optimality: max over I_up minus min
    // over I_low <= tolerance.
    auto in_up = [&](std::size_t i) { return y[i] > 0 ? alpha[i] < C : alpha[i] > 0.0; };
    auto in_low = [&](std::size_t i) { return y[i] > 0 ? alpha[i] > 0.0 : alpha[i] < C; };

    SmoResult result;
    long iter = 0;
    double m_val = 0.0, M_val = 0.0;
    bool converged = false;
    for (; iter < cfg.max_passes; ++iter) {
        std::size_t i_sel = n, j_sel = n;
        m_val = -std::numeric_limits<double>::infinity();
        M_val = +std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double v = y[i] - G[i];
            if (in_up(i) && v > m_val) {
                m_val = v;
                i_sel = i;
            }
            if (in_low(i) && v < M_val) {
                M_val = v;
                j_sel = i;
            }
        }
        if (i_sel == n || j_sel == n || m_val - M_val <= cfg.tolerance) {
            converged = true;
            break;
        }

        const std::size_t i = i_sel, j = j_sel;
        const double Kii = K.at(i, i), Kjj = K.at(j, j), Kij = K.at(i, j);
        const double eta = std::max(Kii + Kjj - 2.0 * Kij, 1e-12);
        const double Ei = G[i] - y[i], Ej = G[j] - y[j];
        const double s = static_cast<double>(y[i] * y[j]);

        double L, H;
        if (y[i] != y[j]) {
            L = std::max(0.0, alpha[j] - alpha[i]);
            H = std::min(C, C + alpha[j] - alpha[i]);
        } else {
            L = std::max(0.0, alpha[i] + alpha[j] - C);
            H = std::min(C, alpha[i] + alpha[j]);
        }

        double aj = alpha[j] + y[j] * (Ei - Ej) / eta;
        aj = std::clamp(aj, L, H);
        if (aj < 1e-12) aj = 0.0;
        if (aj > C - 1e-12) aj = C;
        double ai = alpha[i] + s * (alpha[j] - aj);
        ai = std::clamp(ai, 0.0, C);
        if (ai < 1e-12) ai = 0.0;
        if (ai > C - 1e-12) ai = C;

        const double di = ai - alpha[i], dj = aj - alpha[j];
        alpha[i] = ai;
        alpha[j] = aj;
        for (std::size_t t = 0; t < n; ++t) G[t] += di * y[i] * K.at(i, t) + dj * y[j] * K.at(j, t);
    }

    // Bias from the unbounded support vectors; midpoint of the feasible
    // interval when none are free.
    double bias_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > 0.0 && alpha[i] < C) {
            bias_sum += y[i] - G[i];
            ++free_count;
        }
    }
    if (free_count > 0) {
        result.bias = bias_sum / static_cast<double>(free_count);
    } else {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = +std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double v = y[i] - G[i];
            if (in_up(i)) lo = std::max(lo, v);
            if (in_low(i)) hi = std::min(hi, v);
        }
        if (std::isinf(lo)) result.bias = hi;
        else if (std::isinf(hi)) result.bias = lo;
        else result.bias = (lo + hi) / 2.0;
    }

    double dual = 0.0;
    for (std::size_t i = 0; i < n; ++i) dual += alpha[i] - 0.5 * alpha[i] * y[i] * G[i];

    result.alpha = std::move(alpha);
    result.dual_objective = dual;
    result.converged = converged;
    result.iterations = iter;
    return result;
}

KernelModel train_kernel_expansion(const Dataset& ds, const TrainConfig& cfg, const FeatureMask& mask) {
    if (mask.cardinality() != ds.dim())
        throw std::invalid_argument("mask cardinality does not match dataset dimension");
    const SmoResult sol = smo_solve(ds, cfg);
    KernelModel m;
    m.kernel = cfg.kernel;
    m.bias = sol.bias;
    m.mask = mask;
    m.support_vectors.cols = ds.dim();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (sol.alpha[i] > 0.0) {
            m.support_vectors.push_row(ds.features.row(i));
            m.dual_coeffs.push_back(sol.alpha[i] * ds.labels[i]);
        }
    }
    if (m.dual_coeffs.empty()) {
        // Degenerate fit (e.g. identical points with tiny C): keep one
        // zero-coefficient vector so the expansion stays well-formed.
        m.support_vectors.push_row(ds.features.row(0));
        m.dual_coeffs.push_back(0.0);
    }
    return m;
}

TrainedModel train(const Dataset& ds, const TrainConfig& cfg, const FeatureMask& mask) {
    check_train_config(cfg);
    const SmoResult sol = smo_solve(ds, cfg);
    TrainedModel out;
    out.config = cfg;
    out.converged = sol.converged;
    if (cfg.kernel.kind == Kernel::Kind::linear) {
        LinearModel lin;
        lin.weights.assign(ds.dim(), 0.0);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (sol.alpha[i] == 0.0) continue;
            const double c = sol.alpha[i] * ds.labels[i];
            const auto row = ds.features.row(i);
            for (std::size_t j = 0; j < ds.dim(); ++j) lin.weights[j] += c * row[j];
        }
        lin.bias = sol.bias;
        lin.mask = mask;
        if (lin.weights.size() != mask.cardinality())
            throw std::invalid_argument("mask cardinality does not match dataset dimension");
        out.model = std::move(lin);
    } else {
        KernelModel km;
        km.kernel = cfg.kernel;
        km.bias = sol.bias;
        km.mask = mask;
        km.support_vectors.cols = ds.dim();
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (sol.alpha[i] > 0.0) {
                km.support_vectors.push_row(ds.features.row(i));
                km.dual_coeffs.push_back(sol.alpha[i] * ds.labels[i]);
            }
        }
        if (km.dual_coeffs.empty()) {
            km.support_vectors.push_row(ds.features.row(0));
            km.dual_coeffs.push_back(0.0);
        }
        if (km.support_vectors.cols != mask.cardinality())
            throw std::invalid_argument("mask cardinality does not match dataset dimension");
        out.model = std::move(km);
    }
    return out;
}

TrainedModel train(const Dataset& ds, const TrainConfig& cfg) {
    return train(ds, cfg, FeatureMask::all_on(ds.dim()));
}

double discriminant(const LinearModel& m, std::span<const double> x) {
    if (x.size() != m.weights.size())
        throw std::invalid_argument("discriminant: input has dimension " + std::to_string(x.size()) +
                                    ", model expects " + std::to_string(m.weights.size()));
    if (!all_finite(x)) throw std::invalid_argument("discriminant: non-finite input");
    return dot(m.weights, x) + m.bias;
}

double discriminant(const KernelModel& m, std::span<const double> x) {
    if (x.size() != m.support_vectors.cols)
        throw std::invalid_argument("discriminant: input has dimension " + std::to_string(x.size()) +
                                    ", model expects " + std::to_string(m.support_vectors.cols));
    if (!all_finite(x)) throw std::invalid_argument("discriminant: non-finite input");
    double g = m.bias;
    for (std::size_t i = 0; i < m.support_vectors.rows; ++i)
        g += m.dual_coeffs[i] * kernel_eval(m.kernel, x, m.support_vectors.row(i));
    return g;
}

double discriminant(const TrainedModel& m, std::span<const double> x) {
    return m.is_linear() ? discriminant(m.linear(), x) : discriminant(m.kernel_expansion(), x);
}

std::vector<double> discriminant_gradient(const TrainedModel& m, std::span<const double> x) {
    if (x.size() != m.dim())
        throw std::invalid_argument("gradient: input has dimension " + std::to_string(x.size()) +
                                    ", model expects " + std::to_string(m.dim()));
    if (m.is_linear()) return m.linear().weights;

    const KernelModel& km = m.kernel_expansion();
    std::vector<double> grad(x.size(), 0.0);
    if (km.kernel.kind == Kernel::Kind::linear) {
        for (std::size_t i = 0; i < km.support_vectors.rows; ++i) {
            const auto sv = km.support_vectors.row(i);
            for (std::size_t j = 0; j < x.size(); ++j) grad[j] += km.dual_coeffs[i] * sv[j];
        }
        return grad;
    }
    // RBF: grad k(x, x_i) = -2 gamma exp(-gamma ||x - x_i||^2) (x - x_i)
    const double gamma = km.kernel.gamma;
    for (std::size_t i = 0; i < km.support_vectors.rows; ++i) {
        const auto sv = km.support_vectors.row(i);
        const double k = std::exp(-gamma * squared_distance(x, sv));
        const double scale = km.dual_coeffs[i] * -2.0 * gamma * k;
        for (std::size_t j = 0; j < x.size(); ++j) grad[j] += scale * (x[j] - sv[j]);
    }
    return grad;
}

TrainedModel with_bias_shift(const TrainedModel& m, double delta) {
    TrainedModel out = m;
    if (out.is_linear())
        std::get<LinearModel>(out.model).bias += delta;
    else
        std::get<KernelModel>(out.model).bias += delta;
    return out;
}

TrainConfig grid_search(const Dataset& ds, const std::vector<TrainConfig>& grid, const FoldPlan& folds) {
    if (grid.empty()) throw std::invalid_argument("grid_search: empty grid");
    if (grid.size() == 1) return grid.front();

    struct Cell {
        double acc = -1.0;
        bool valid = false;
    };
    std::vector<Cell> cells(grid.size());
    std::vector<std::string> errors;

    for (std::size_t c = 0; c < grid.size(); ++c) {
        double acc_sum = 0.0;
        int ok_folds = 0;
        for (int f = 0; f < folds.k; ++f) {
            try {
                const Dataset train_part = ds.subset(folds.complement_indices(f));
                const Dataset val_part = ds.subset(folds.fold_indices(f));
                const TrainedModel model = train(train_part, grid[c]);
                double correct = 0.0;
                for (std::size_t i = 0; i < val_part.size(); ++i)
                    if (predicted_label(discriminant(model, val_part.features.row(i))) == val_part.labels[i])
                        correct += 1.0;
                acc_sum += correct / static_cast<double>(val_part.size());
                ++ok_folds;
            } catch (const std::exception& e) {
                errors.push_back("cell " + std::to_string(c) + " fold " + std::to_string(f) + ": " + e.what());
            }
        }
        if (ok_folds > 0) {
            cells[c].acc = acc_sum / ok_folds;
            cells[c].valid = true;
        }
    }

    std::size_t best = grid.size();
    for (std::size_t c = 0; c < grid.size(); ++c) {
        if (!cells[c].valid) continue;
        if (best == grid.size()) {
            best = c;
            continue;
        }
        const auto gamma_of = [](const TrainConfig& t) {
            return t.kernel.kind == Kernel::Kind::rbf ? t.kernel.gamma : 0.0;
        };
        if (cells[c].acc > cells[best].acc ||
            (cells[c].acc == cells[best].acc &&
             (grid[c].C < grid[best].C ||
              (grid[c].C == grid[best].C && gamma_of(grid[c]) < gamma_of(grid[best])))))
            best = c;
    }
    if (best == grid.size()) {
        std::string msg = "grid_search: every cell failed on every fold";
        for (const auto& e : errors) msg += "\n  " + e;
        throw std::runtime_error(msg);
    }
    return grid[best];
}

}  // namespace advsel
