#include "advsel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "advsel/parallel.hpp"

namespace advsel {

double SecurityEstimate::std_cost() const {
    if (per_sample_costs.empty()) return 0.0;
    double var = 0.0;
    for (double c : per_sample_costs) var += (c - mean_cost) * (c - mean_cost);
    return std::sqrt(var / static_cast<double>(per_sample_costs.size()));
}

double accuracy(const TrainedModel& m, const Dataset& ds) {
    if (ds.size() == 0) throw std::invalid_argument("accuracy: empty dataset");
    if (ds.dim() != m.dim())
        throw std::invalid_argument("accuracy: dataset dimension " + std::to_string(ds.dim()) +
                                    " does not match model dimension " + std::to_string(m.dim()));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (predicted_label(discriminant(m, ds.features.row(i))) == ds.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

OperatingPoint calibrate_threshold(std::vector<double> legit_scores, double fp_rate) {
    if (!(fp_rate > 0.0 && fp_rate < 1.0))
        throw std::invalid_argument("fp_rate must lie in (0, 1)");
    const std::size_t n = legit_scores.size();
    const auto needed = static_cast<std::size_t>(std::ceil(1.0 / fp_rate));
    if (n < needed)
        throw std::invalid_argument("calibrate_threshold: need at least " + std::to_string(needed) +
                                    " legitimate samples for fp_rate " + std::to_string(fp_rate) +
                                    ", got " + std::to_string(n));
    std::sort(legit_scores.begin(), legit_scores.end());
    OperatingPoint op;
    op.fp_rate = fp_rate;
    // Smallest candidate threshold whose achieved FP (scores >= threshold)
    // is within the target; candidates are the scores themselves plus a
    // step above the maximum.
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && legit_scores[i] == legit_scores[i - 1]) continue;
        const double fp = static_cast<double>(n - i) / static_cast<double>(n);
        if (fp <= fp_rate) {
            op.threshold = legit_scores[i];
            return op;
        }
    }
    op.threshold = std::nextafter(legit_scores.back(), std::numeric_limits<double>::infinity());
    return op;
}

OperatingPoint calibrate_threshold(const TrainedModel& m, const Dataset& ds, double fp_rate) {
    std::vector<double> scores;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds.labels[i] == -1) scores.push_back(discriminant(m, ds.features.row(i)));
    return calibrate_threshold(std::move(scores), fp_rate);
}

double tp_at_fp(const TrainedModel& m, const Dataset& ds, const OperatingPoint& op) {
    std::size_t malicious = 0, detected = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.labels[i] != +1) continue;
        ++malicious;
        if (discriminant(m, ds.features.row(i)) - op.threshold >= 0.0) ++detected;
    }
    if (malicious == 0) throw std::invalid_argument("tp_at_fp: no malicious samples");
    return static_cast<double>(detected) / static_cast<double>(malicious);
}

SecurityEstimate hardness_of_evasion(const TrainedModel& m, const Matrix& malicious,
                                     DistanceKind kind, const ConstraintSet& constraints,
                                     const SolverParams& params, const HardnessOptions& opts) {
    if (malicious.rows == 0) throw std::invalid_argument("hardness_of_evasion: empty malicious set");
    const TrainedModel target = with_bias_shift(m, -opts.threshold);

    struct PerSample {
        double cost = 0.0;
        bool unevaded = false;
        bool errored = false;
        std::string error;
    };
    std::vector<PerSample> rows(malicious.rows);

    parallel_for(malicious.rows, opts.jobs, [&](std::size_t i) {
        PerSample& out = rows[i];
        const auto x = malicious.row(i);
        try {
            const double g = discriminant(target, x);
            if (g < 0.0) {
                out.cost = 0.0;  // already below the deployed threshold
                return;
            }
            // Linear + squared-l2 has an exact answer; use it unless clipping
            // pushes the point back over the boundary.
            if (opts.closed_form_fast_path && target.is_linear() &&
                kind == DistanceKind::l2_squared && !constraints.all_discrete()) {
                auto point = closed_form_linear_l2(target.linear(), x, params.margin_overshoot,
                                                   &constraints);
                if (discriminant(target, point) < 0.0) {
                    out.cost = natural_cost(kind, distance(kind, point, x));
                    return;
                }
            }
            const EvasionResult r = min_cost_evasion(target, x, kind, constraints, params,
                                                     opts.legit_pool);
            if (r.evaded) {
                out.cost = natural_cost(kind, r.cost);
            } else {
                out.cost = natural_cost(kind, constraints.max_feasible_distance(kind, x));
                out.unevaded = true;
            }
        } catch (const std::exception& e) {
            out.errored = true;
            out.error = e.what();
        }
    });

    SecurityEstimate est;
    std::size_t ok = 0;
    std::string first_error;
    for (const auto& r : rows) {
        if (r.errored) {
            if (first_error.empty()) first_error = r.error;
            continue;
        }
        est.per_sample_costs.push_back(r.cost);
        est.mean_cost += r.cost;
        if (r.unevaded) ++est.unevaded_count;
        ++ok;
    }
    if (ok == 0)
        throw std::runtime_error("hardness_of_evasion: every sample failed: " + first_error);
    est.mean_cost /= static_cast<double>(ok);
    return est;
}

double weight_evenness(std::span<const double> weights) {
    const std::size_t d = weights.size();
    if (d < 2) throw std::invalid_argument("weight_evenness: need at least 2 weights");
    std::vector<double> mags(weights.size());
    double total = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        mags[i] = std::abs(weights[i]);
        total += mags[i];
    }
    if (total == 0.0) throw std::invalid_argument("weight_evenness: zero weight vector");
    std::sort(mags.begin(), mags.end(), std::greater<>());
    double cum = 0.0, sum_ratios = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        cum += mags[k];
        sum_ratios += cum / total;
    }
    const double e = 2.0 / (static_cast<double>(d) - 1.0) * (static_cast<double>(d) - sum_ratios);
    return std::clamp(e, 0.0, 1.0);
}

double pearson(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b, "pearson");
    const auto n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return cov / std::sqrt(va * vb);
}

CorrelationReport security_correlation_report(const std::vector<TrainedModel>& models,
                                              const std::vector<Matrix>& malicious_sets,
                                              DistanceKind kind, const ConstraintSet& constraints,
                                              const SolverParams& params, double threshold) {
    if (models.size() < 3)
        throw std::invalid_argument("security_correlation_report: need at least 3 models");
    if (models.size() != malicious_sets.size())
        throw std::invalid_argument("security_correlation_report: one malicious set per model");
    CorrelationReport rep;
    for (std::size_t i = 0; i < models.size(); ++i) {
        if (!models[i].is_linear())
            throw std::invalid_argument("security_correlation_report: weight evenness needs linear models");
        HardnessOptions opts;
        opts.threshold = threshold;
        rep.hardness.push_back(
            hardness_of_evasion(models[i], malicious_sets[i], kind, constraints, params, opts).mean_cost);
        rep.evenness.push_back(weight_evenness(models[i].linear().weights));
    }
    rep.pearson_r = pearson(rep.hardness, rep.evenness);
    rep.defined = std::isfinite(rep.pearson_r);
    if (!rep.defined)
        rep.note = "correlation undefined: at least one measure has zero variance across models";
    return rep;
}

}  // namespace advsel
