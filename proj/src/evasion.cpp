#include "advsel/evasion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace advsel {

double distance(DistanceKind kind, std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b, "distance");
    double s = 0.0;
    if (kind == DistanceKind::l1) {
        for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    } else {
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = a[i] - b[i];
            s += d * d;
        }
    }
    return s;
}

std::vector<double> distance_subgradient(DistanceKind kind, std::span<const double> a,
                                         std::span<const double> b) {
    require_same_length(a, b, "distance_subgradient");
    std::vector<double> g(a.size(), 0.0);
    if (kind == DistanceKind::l1) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = a[i] - b[i];
            g[i] = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        }
    } else {
        for (std::size_t i = 0; i < a.size(); ++i) g[i] = 2.0 * (a[i] - b[i]);
    }
    return g;
}

// ---------------------------------------------------------------------------
// ConstraintSet

ConstraintSet ConstraintSet::from_domains(const std::vector<FeatureDomain>& domains, bool monotone) {
    ConstraintSet c;
    c.monotone_increase = monotone;
    c.lo.reserve(domains.size());
    c.hi.reserve(domains.size());
    c.grids.reserve(domains.size());
    for (const auto& d : domains) {
        c.lo.push_back(d.lo());
        c.hi.push_back(d.hi());
        c.grids.push_back(d.is_discrete() ? d.levels() : std::vector<double>{});
    }
    return c;
}

bool ConstraintSet::all_discrete() const {
    for (const auto& g : grids)
        if (g.empty()) return false;
    return !grids.empty();
}

void ConstraintSet::project(std::vector<double>& x, std::span<const double> origin) const {
    for (std::size_t j = 0; j < x.size(); ++j) {
        x[j] = std::clamp(x[j], lo[j], hi[j]);
        if (monotone_increase) x[j] = std::max(x[j], origin[j]);
    }
}

bool ConstraintSet::satisfied(std::span<const double> x, std::span<const double> origin,
                              double tol) const {
    if (x.size() != dim()) return false;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (x[j] < lo[j] - tol || x[j] > hi[j] + tol) return false;
        if (monotone_increase && x[j] < origin[j] - tol) return false;
        if (!grids[j].empty()) {
            bool on_grid = false;
            for (double level : grids[j])
                if (std::abs(x[j] - level) <= tol) {
                    on_grid = true;
                    break;
                }
            if (!on_grid) return false;
        }
    }
    return true;
}

double ConstraintSet::max_feasible_distance(DistanceKind kind, std::span<const double> origin) const {
    double total = 0.0;
    for (std::size_t j = 0; j < dim(); ++j) {
        double reach = 0.0;
        if (!grids[j].empty()) {
            for (double level : grids[j]) {
                if (monotone_increase && level < origin[j]) continue;
                reach = std::max(reach, std::abs(level - origin[j]));
            }
        } else {
            reach = hi[j] - origin[j];
            if (!monotone_increase) reach = std::max(reach, origin[j] - lo[j]);
            reach = std::max(reach, 0.0);
        }
        total += kind == DistanceKind::l1 ? reach : reach * reach;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Closed form for linear models under squared-l2 cost

std::vector<double> closed_form_linear_l2(const LinearModel& m, std::span<const double> x,
                                          double overshoot, const ConstraintSet* constraints) {
    const double g0 = discriminant(m, x);
    if (g0 < 0.0) throw std::invalid_argument("closed_form_linear_l2: sample already evades (g < 0)");
    const double wnorm2 = dot(m.weights, m.weights);
    if (wnorm2 <= 0.0) throw std::invalid_argument("closed_form_linear_l2: zero weight vector");
    std::vector<double> out(x.begin(), x.end());
    const double scale = (g0 + overshoot) / wnorm2;
    for (std::size_t j = 0; j < out.size(); ++j) out[j] -= scale * m.weights[j];
    if (constraints) constraints->project(out, x);
    return out;
}

// ---------------------------------------------------------------------------
// Continuous alternating descent (one initialization)

namespace {

std::vector<double> checked_gradient(const TrainedModel& m, std::span<const double> x, long iter) {
    auto g = discriminant_gradient(m, x);
    if (!all_finite(g))
        throw std::runtime_error("non-finite discriminant gradient at iteration " + std::to_string(iter));
    return g;
}

struct BestPoint {
    std::vector<double> x;
    double cost = std::numeric_limits<double>::infinity();  // raw units
    double g = 0.0;
    bool found = false;

    void offer(std::span<const double> cand, double cand_cost, double cand_g) {
        if (cand_g < 0.0 && cand_cost < cost) {
            x.assign(cand.begin(), cand.end());
            cost = cand_cost;
            g = cand_g;
            found = true;
        }
    }
};

EvasionResult finalize(const TrainedModel& m, std::span<const double> x, DistanceKind kind,
                       const BestPoint& best, InitKind init, long iterations,
                       std::vector<TracePoint> trajectory) {
    EvasionResult r;
    r.iterations = iterations;
    r.trajectory = std::move(trajectory);
    if (best.found) {
        r.x_star = best.x;
        r.cost = distance(kind, r.x_star, x);
        r.g_value = best.g;
        r.evaded = true;
        r.init_used = init;
    } else {
        r.x_star.assign(x.begin(), x.end());
        r.cost = 0.0;
        r.g_value = discriminant(m, x);
        r.evaded = false;
        r.init_used = init;
    }
    return r;
}

}  // namespace

EvasionResult descend_from(const TrainedModel& m, std::span<const double> x,
                           std::span<const double> x0, InitKind init, DistanceKind kind,
                           const ConstraintSet& constraints, const SolverParams& params) {
    std::vector<double> cur(x0.begin(), x0.end());
    constraints.project(cur, x);

    BestPoint best;
    std::vector<TracePoint> trajectory;
    double g_cur = discriminant(m, cur);
    double cost_cur = distance(kind, cur, x);
    best.offer(cur, cost_cur, g_cur);
    if (params.record_trajectory) trajectory.push_back({cost_cur, g_cur, g_cur >= 0.0 ? 0 : 1});

    long iter = 0;
    for (iter = 1; iter <= params.max_iters; ++iter) {
        const bool boundary_phase = g_cur >= 0.0;
        const std::vector<double> grad =
            boundary_phase ? checked_gradient(m, cur, iter) : distance_subgradient(kind, cur, x);

        std::vector<double> cand(cur.size());
        double step = params.step_size;
        bool accepted = false;
        double g_cand = g_cur, cost_cand = cost_cur;
        for (int bt = 0; bt <= params.max_backtracks; ++bt) {
            for (std::size_t j = 0; j < cur.size(); ++j) cand[j] = cur[j] - step * grad[j];
            constraints.project(cand, x);
            g_cand = discriminant(m, cand);
            cost_cand = distance(kind, cand, x);
            if (!params.backtrack) {
                accepted = true;
                break;
            }
            // A step that worsens the phase objective (or, once evading,
            // falls back into the detected region) is halved and retried.
            const bool ok = boundary_phase ? g_cand < g_cur : (cost_cand < cost_cur && g_cand < 0.0);
            if (ok) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // No acceptable step: converged if already evading, stuck otherwise.
            if (g_cur < 0.0) break;
            break;
        }

        const bool unchanged = std::equal(cand.begin(), cand.end(), cur.begin());
        const double delta = std::abs(cost_cand - cost_cur);
        cur = cand;
        g_cur = g_cand;
        cost_cur = cost_cand;
        best.offer(cur, cost_cur, g_cur);
        if (params.record_trajectory) trajectory.push_back({cost_cur, g_cur, boundary_phase ? 0 : 1});
        if (unchanged) break;
        if (delta < params.epsilon && g_cur < 0.0) break;
    }

    return finalize(m, x, kind, best, init, std::min(iter, params.max_iters), std::move(trajectory));
}

// ---------------------------------------------------------------------------
// Discrete local search

namespace {

// Indices of the top_k features by |gradient|, largest first, ties by index.
std::vector<std::size_t> rank_by_gradient(std::span<const double> grad, int top_k) {
    std::vector<std::size_t> order(grad.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(grad[a]) > std::abs(grad[b]);
    });
    if (top_k > 0 && static_cast<std::size_t>(top_k) < order.size())
        order.resize(static_cast<std::size_t>(top_k));
    return order;
}

// Position of v in the grid (values are expected to sit on it already).
std::optional<std::size_t> grid_index(const std::vector<double>& levels, double v) {
    for (std::size_t i = 0; i < levels.size(); ++i)
        if (std::abs(levels[i] - v) <= 1e-9) return i;
    return std::nullopt;
}

}  // namespace

EvasionResult discrete_min_cost_evasion(const TrainedModel& m, std::span<const double> x,
                                        DistanceKind kind, const ConstraintSet& constraints,
                                        const SolverParams& params) {
    if (!constraints.all_discrete())
        throw std::invalid_argument("discrete_min_cost_evasion requires quantized/Boolean domains");
    if (discriminant(m, x) < 0.0)
        throw std::invalid_argument("discrete_min_cost_evasion: sample already evades (g < 0)");

    std::vector<double> cur(x.begin(), x.end());
    BestPoint best;
    std::vector<TracePoint> trajectory;
    std::set<std::vector<double>> visited;
    visited.insert(cur);

    double g_cur = discriminant(m, cur);
    double cost_cur = 0.0;
    if (params.record_trajectory) trajectory.push_back({cost_cur, g_cur, 0});

    long iter = 0;
    for (iter = 1; iter <= params.max_iters; ++iter) {
        const bool boundary_phase = g_cur >= 0.0;
        const std::vector<double> grad =
            boundary_phase ? checked_gradient(m, cur, iter) : distance_subgradient(kind, cur, x);
        const double obj_cur = boundary_phase ? g_cur : cost_cur;

        double best_obj = obj_cur;
        std::size_t best_feature = cur.size();
        double best_level = 0.0, best_g = 0.0, best_cost = 0.0;
        for (std::size_t k : rank_by_gradient(grad, params.top_k)) {
            if (grad[k] == 0.0) continue;
            const auto& levels = constraints.grids[k];
            const auto pos = grid_index(levels, cur[k]);
            if (!pos) continue;
            // One level along -sign(grad): down the grid for positive
            // gradient components, up for negative ones.
            const long next = static_cast<long>(*pos) + (grad[k] > 0.0 ? -1 : +1);
            if (next < 0 || next >= static_cast<long>(levels.size())) continue;
            const double level = levels[static_cast<std::size_t>(next)];
            if (constraints.monotone_increase && level < x[k]) continue;
            if (level < constraints.lo[k] || level > constraints.hi[k]) continue;

            const double old = cur[k];
            cur[k] = level;
            const double g_cand = discriminant(m, cur);
            const double cost_cand = distance(kind, cur, x);
            cur[k] = old;

            const double obj = boundary_phase ? g_cand : cost_cand;
            if (obj < best_obj) {  // strict improvement; ranking loop keeps lowest index on ties
                best_obj = obj;
                best_feature = k;
                best_level = level;
                best_g = g_cand;
                best_cost = cost_cand;
            }
        }
        if (best_feature == cur.size()) break;  // no candidate improves

        cur[best_feature] = best_level;
        g_cur = best_g;
        cost_cur = best_cost;
        best.offer(cur, cost_cur, g_cur);
        if (params.record_trajectory) trajectory.push_back({cost_cur, g_cur, boundary_phase ? 0 : 1});
        if (!visited.insert(cur).second) break;  // revisited state: deterministic cycle
    }

    return finalize(m, x, kind, best, InitKind::self, std::min(iter, params.max_iters),
                    std::move(trajectory));
}

// ---------------------------------------------------------------------------
// Minimum-cost evasion with dual initialization

EvasionResult min_cost_evasion(const TrainedModel& m, std::span<const double> x, DistanceKind kind,
                               const ConstraintSet& constraints, const SolverParams& params,
                               const Matrix* neighbor_pool) {
    if (x.size() != constraints.dim())
        throw std::invalid_argument("min_cost_evasion: sample/constraint dimension mismatch");
    if (constraints.all_discrete()) return discrete_min_cost_evasion(m, x, kind, constraints, params);
    if (discriminant(m, x) < 0.0)
        throw std::invalid_argument("min_cost_evasion: sample already evades (g < 0)");

    EvasionResult self_run = descend_from(m, x, x, InitKind::self, kind, constraints, params);

    // Nearest constraint-feasible pool point that is classified legitimate.
    std::optional<std::vector<double>> start;
    double start_dist = std::numeric_limits<double>::infinity();
    if (neighbor_pool) {
        for (std::size_t i = 0; i < neighbor_pool->rows; ++i) {
            std::vector<double> q(neighbor_pool->row(i).begin(), neighbor_pool->row(i).end());
            constraints.project(q, x);
            if (discriminant(m, q) >= 0.0) continue;
            const double d = distance(kind, q, x);
            if (d < start_dist) {
                start_dist = d;
                start = std::move(q);
            }
        }
    }
    if (!start) return self_run;

    EvasionResult legit_run =
        descend_from(m, x, *start, InitKind::nearest_legit, kind, constraints, params);
    legit_run.iterations += self_run.iterations;
    self_run.iterations = legit_run.iterations;

    if (!legit_run.evaded) return self_run;
    if (!self_run.evaded) return legit_run;
    return self_run.cost <= legit_run.cost ? self_run : legit_run;
}

// ---------------------------------------------------------------------------
// Budgeted attack

const FrontierPoint& AttackFrontier::best_within(double budget) const {
    if (points.empty()) throw std::logic_error("empty attack frontier");
    const double slack = budget + 1e-9 * std::max(1.0, std::abs(budget));
    const FrontierPoint* best = nullptr;
    for (const auto& p : points) {
        if (p.cost > slack) continue;
        if (!best || p.g < best->g) best = &p;
    }
    if (!best) return points.front();  // points[0] always has cost 0
    return *best;
}

namespace {

AttackFrontier budgeted_descent_continuous(const TrainedModel& m, std::span<const double> x,
                                           DistanceKind kind, const ConstraintSet& constraints,
                                           const SolverParams& params, double c_max) {
    AttackFrontier frontier;
    std::vector<double> cur(x.begin(), x.end());
    double g_cur = discriminant(m, cur);
    frontier.points.push_back({cur, 0.0, g_cur});
    if (c_max <= 0.0) return frontier;

    for (long iter = 1; iter <= params.max_iters; ++iter) {
        const std::vector<double> grad = checked_gradient(m, cur, iter);

        std::vector<double> cand(cur.size());
        double step = params.step_size;
        bool accepted = false;
        double g_cand = g_cur;
        for (int bt = 0; bt <= params.max_backtracks; ++bt) {
            for (std::size_t j = 0; j < cur.size(); ++j) cand[j] = cur[j] - step * grad[j];
            constraints.project(cand, x);
            // Pull back onto the budget ball: shrinking the offset toward x
            // scales both distances linearly and stays inside the box.
            const double cost = natural_cost(kind, distance(kind, cand, x));
            if (cost > c_max) {
                const double f = c_max / cost;
                for (std::size_t j = 0; j < cand.size(); ++j)
                    cand[j] = x[j] + f * (cand[j] - x[j]);
            }
            g_cand = discriminant(m, cand);
            if (!params.backtrack || g_cand < g_cur) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        if (std::equal(cand.begin(), cand.end(), cur.begin())) break;
        cur = cand;
        g_cur = g_cand;
        frontier.points.push_back({cur, natural_cost(kind, distance(kind, cur, x)), g_cur});
    }
    return frontier;
}

AttackFrontier budgeted_descent_discrete(const TrainedModel& m, std::span<const double> x,
                                         DistanceKind kind, const ConstraintSet& constraints,
                                         const SolverParams& params, double c_max) {
    AttackFrontier frontier;
    std::vector<double> cur(x.begin(), x.end());
    double g_cur = discriminant(m, cur);
    frontier.points.push_back({cur, 0.0, g_cur});
    if (c_max <= 0.0) return frontier;
    const double slack = c_max + 1e-9 * std::max(1.0, c_max);

    for (long iter = 1; iter <= params.max_iters; ++iter) {
        const std::vector<double> grad = checked_gradient(m, cur, iter);
        double best_g = g_cur;
        std::size_t best_feature = cur.size();
        double best_level = 0.0, best_cost = 0.0;
        for (std::size_t k : rank_by_gradient(grad, params.top_k)) {
            if (grad[k] == 0.0) continue;
            const auto& levels = constraints.grids[k];
            const auto pos = grid_index(levels, cur[k]);
            if (!pos) continue;
            const long next = static_cast<long>(*pos) + (grad[k] > 0.0 ? -1 : +1);
            if (next < 0 || next >= static_cast<long>(levels.size())) continue;
            const double level = levels[static_cast<std::size_t>(next)];
            if (constraints.monotone_increase && level < x[k]) continue;

            const double old = cur[k];
            cur[k] = level;
            const double cost = natural_cost(kind, distance(kind, cur, x));
            const double g_cand = cost <= slack ? discriminant(m, cur) : g_cur;
            cur[k] = old;
            if (cost > slack) continue;
            if (g_cand < best_g) {
                best_g = g_cand;
                best_feature = k;
                best_level = level;
                best_cost = cost;
            }
        }
        if (best_feature == cur.size()) break;
        cur[best_feature] = best_level;
        g_cur = best_g;
        frontier.points.push_back({cur, best_cost, g_cur});
    }
    return frontier;
}

}  // namespace

AttackFrontier budgeted_descent(const TrainedModel& m, std::span<const double> x, DistanceKind kind,
                                const ConstraintSet& constraints, const SolverParams& params,
                                double c_max) {
    if (c_max < 0.0) throw std::invalid_argument("attack budget must be >= 0");
    if (x.size() != constraints.dim())
        throw std::invalid_argument("budgeted_descent: sample/constraint dimension mismatch");
    return constraints.all_discrete()
               ? budgeted_descent_discrete(m, x, kind, constraints, params, c_max)
               : budgeted_descent_continuous(m, x, kind, constraints, params, c_max);
}

EvasionResult budgeted_attack(const TrainedModel& m, std::span<const double> x, DistanceKind kind,
                              const ConstraintSet& constraints, const SolverParams& params,
                              double c_max) {
    const AttackFrontier frontier = budgeted_descent(m, x, kind, constraints, params, c_max);
    const FrontierPoint& pick = frontier.best_within(c_max);
    EvasionResult r;
    r.x_star = pick.x;
    r.cost = distance(kind, r.x_star, x);
    r.g_value = pick.g;
    r.evaded = pick.g < 0.0;
    r.init_used = InitKind::self;
    r.iterations = static_cast<long>(frontier.points.size()) - 1;
    if (params.record_trajectory) {
        r.trajectory.reserve(frontier.points.size());
        for (const auto& p : frontier.points)
            r.trajectory.push_back({distance(kind, p.x, x), p.g, 0});
    }
    return r;
}

}  // namespace advsel
