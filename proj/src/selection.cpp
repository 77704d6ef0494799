#include "advsel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "advsel/parallel.hpp"
#include "advsel/rng.hpp"
#include "advsel/serialize.hpp"

namespace advsel {

namespace {

void check_config(const Dataset& ds, const SelectionConfig& cfg) {
    if (cfg.m < 1 || cfg.m > ds.dim())
        throw std::invalid_argument("selection: m must satisfy 1 <= m <= d");
    if (cfg.lambda < 0.0) throw std::invalid_argument("selection: lambda must be >= 0");
    if (cfg.train_grid.empty()) throw std::invalid_argument("selection: empty training grid");
    if (cfg.folds < 2 && !cfg.fold_plan) throw std::invalid_argument("selection: folds must be >= 2");
}

}  // namespace

std::pair<double, double> evaluate_candidate(const Dataset& ds, const FeatureMask& mask,
                                             const SelectionConfig& cfg, const FoldPlan& plan) {
    if (mask.cardinality() == 0) throw std::invalid_argument("evaluate_candidate: empty mask");
    const Dataset masked = apply_mask(ds, mask);
    const ConstraintSet constraints =
        ConstraintSet::from_domains(masked.domains, cfg.attack.monotone_increase);

    double g_sum = 0.0, s_sum = 0.0;
    int ok_folds = 0;
    std::string first_error;
    for (int f = 0; f < plan.k; ++f) {
        try {
            const Dataset train_part = masked.subset(plan.complement_indices(f));
            const Dataset val_part = masked.subset(plan.fold_indices(f));

            TrainConfig best = cfg.train_grid.front();
            if (cfg.train_grid.size() > 1) {
                const FoldPlan inner = stratified_folds(
                    train_part, cfg.folds, substream(cfg.seed, "inner-folds", static_cast<std::uint64_t>(f)));
                best = grid_search(train_part, cfg.train_grid, inner);
            }
            const TrainedModel model = train(train_part, best, mask);

            double threshold = 0.0;
            if (cfg.g_measure == GMeasure::accuracy) {
                g_sum += accuracy(model, val_part);
            } else {
                const OperatingPoint op = calibrate_threshold(model, val_part, cfg.fp_rate);
                g_sum += tp_at_fp(model, val_part, op);
                threshold = op.threshold;
            }

            if (cfg.compute_security) {
                const Matrix mal = val_part.rows_with_label(+1);
                const Matrix legit = val_part.rows_with_label(-1);
                HardnessOptions opts;
                opts.threshold = threshold;
                opts.legit_pool = &legit;
                s_sum += hardness_of_evasion(model, mal, cfg.attack.kind, constraints,
                                             cfg.attack.params, opts)
                             .mean_cost;
            }
            ++ok_folds;
        } catch (const std::exception& e) {
            if (first_error.empty()) first_error = e.what();
        }
    }
    if (ok_folds == 0)
        throw std::runtime_error("candidate failed on every fold: " + first_error);
    const double g = g_sum / ok_folds;
    const double s = cfg.compute_security ? s_sum / ok_folds
                                          : std::numeric_limits<double>::quiet_NaN();
    return {g, s};
}

std::pair<FeatureMask, SelectionTrace> wafs(const Dataset& ds, const SelectionConfig& cfg) {
    check_config(ds, cfg);
    const std::size_t d = ds.dim();

    SelectionTrace trace;
    if (cfg.m == d) {  // nothing to add or remove
        trace.final_mask = FeatureMask::all_on(d);
        return {trace.final_mask, trace};
    }

    const FoldPlan plan = cfg.fold_plan
                              ? *cfg.fold_plan
                              : stratified_folds(ds, cfg.folds, substream(cfg.seed, "selection-folds"));

    const bool forward = cfg.direction == Direction::forward;
    std::vector<std::size_t> selected;             // FS: grown; BE: eliminated
    std::vector<char> in_pool(d, 1);               // feature universe U
    std::size_t pool_size = d;

    struct Candidate {
        std::size_t feature = 0;
        double G = 0.0;
        double S = 0.0;
        bool valid = false;
    };

    std::vector<double> chosen_scores;  // per-iteration winning objective (for best-prefix)
    std::size_t iteration = 0;
    auto done = [&] { return forward ? selected.size() == cfg.m : pool_size == cfg.m; };

    while (!done()) {
        std::vector<std::size_t> pool;
        pool.reserve(pool_size);
        for (std::size_t k = 0; k < d; ++k)
            if (in_pool[k]) pool.push_back(k);

        std::vector<Candidate> cands(pool.size());
        parallel_for(pool.size(), cfg.jobs, [&](std::size_t idx) {
            const std::size_t k = pool[idx];
            std::vector<std::size_t> feats;
            if (forward) {
                feats = selected;
                feats.push_back(k);
            } else {
                for (std::size_t j : pool)
                    if (j != k) feats.push_back(j);
            }
            Candidate& c = cands[idx];
            c.feature = k;
            try {
                const FeatureMask mask = FeatureMask::from_indices(d, feats);
                auto [g, s] = evaluate_candidate(ds, mask, cfg, plan);
                c.G = g;
                c.S = s;
                c.valid = true;
            } catch (const std::exception&) {
                c.valid = false;
            }
        });

        double max_s = 0.0;
        bool any_valid = false;
        for (const auto& c : cands) {
            if (!c.valid) continue;
            any_valid = true;
            if (cfg.compute_security && std::isfinite(c.S)) max_s = std::max(max_s, c.S);
        }
        if (!any_valid)
            throw std::runtime_error("selection: every candidate failed at iteration " +
                                     std::to_string(iteration));
        // Rescale the trade-off by the iteration's largest security value so
        // the units of S do not swamp G; zero max means S carries no signal.
        const double lambda_prime = max_s > 0.0 ? cfg.lambda / max_s : 0.0;

        std::size_t best_idx = cands.size();
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t idx = 0; idx < cands.size(); ++idx) {
            const auto& c = cands[idx];
            if (!c.valid) continue;
            const double s_term = cfg.compute_security && std::isfinite(c.S) ? c.S : 0.0;
            const double score = c.G + lambda_prime * s_term;
            if (score > best_score) {  // strict: ties keep the lowest feature index
                best_score = score;
                best_idx = idx;
            }
        }
        const std::size_t k_star = cands[best_idx].feature;

        for (std::size_t idx = 0; idx < cands.size(); ++idx) {
            const auto& c = cands[idx];
            if (!c.valid) continue;
            trace.records.push_back({iteration, c.feature, c.G, c.S, lambda_prime, idx == best_idx});
        }

        selected.push_back(k_star);
        in_pool[k_star] = 0;
        --pool_size;
        chosen_scores.push_back(best_score);
        ++iteration;
    }

    std::vector<std::size_t> final_features;
    if (forward) {
        final_features = selected;
        if (cfg.best_prefix_by_objective && !chosen_scores.empty()) {
            std::size_t best_len = 1;
            for (std::size_t j = 1; j < chosen_scores.size(); ++j)
                if (chosen_scores[j] > chosen_scores[best_len - 1]) best_len = j + 1;
            final_features.assign(selected.begin(), selected.begin() + best_len);
        }
    } else {
        for (std::size_t k = 0; k < d; ++k)
            if (in_pool[k]) final_features.push_back(k);
    }
    trace.final_mask = FeatureMask::from_indices(d, final_features);
    return {trace.final_mask, trace};
}

std::pair<FeatureMask, SelectionTrace> traditional_wrapper(const Dataset& ds, SelectionConfig cfg) {
    cfg.lambda = 0.0;
    cfg.compute_security = false;  // the G-only wrapper never simulates attacks
    return wafs(ds, cfg);
}

void save_trace_csv(const SelectionTrace& trace, const std::string& path) {
    std::string out = "iteration,candidate,G,S,lambda_prime,chosen\n";
    for (const auto& r : trace.records) {
        out += std::to_string(r.iteration);
        out += ',';
        out += std::to_string(r.feature);
        out += ',';
        out += format_double(r.G);
        out += ',';
        out += std::isfinite(r.S) ? format_double(r.S) : "nan";
        out += ',';
        out += format_double(r.lambda_prime);
        out += ',';
        out += r.chosen ? '1' : '0';
        out += '\n';
    }
    write_text_file(path, out);
}

}  // namespace advsel
