#include "advsel/seceval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "advsel/parallel.hpp"
#include "advsel/rng.hpp"
#include "advsel/serialize.hpp"

namespace advsel {

void AttackScenario::validate() const {
    if (budgets.empty()) throw std::invalid_argument("scenario: empty budget list");
    if (budgets.front() < 0.0) throw std::invalid_argument("scenario: budgets must be >= 0");
    for (std::size_t i = 1; i < budgets.size(); ++i)
        if (!(budgets[i] > budgets[i - 1]))
            throw std::invalid_argument("scenario: budgets must be strictly ascending");
    if (!(fp_rate > 0.0 && fp_rate < 1.0)) throw std::invalid_argument("scenario: fp_rate in (0,1)");
    if (repeats < 1) throw std::invalid_argument("scenario: repeats must be >= 1");
    if (knowledge == Knowledge::limited && surrogate_size < 4)
        throw std::invalid_argument("scenario: limited knowledge needs surrogate_size >= 4");
}

TrainedModel train_surrogate(const Dataset& surrogate_ds, const FeatureMask& mask,
                             const std::vector<TrainConfig>& grid, std::uint64_t seed) {
    if (grid.empty()) throw std::invalid_argument("train_surrogate: empty grid");
    const Dataset masked = apply_mask(surrogate_ds, mask);
    if (!masked.has_both_classes())
        throw std::invalid_argument("train_surrogate: surrogate data must contain both classes");
    TrainConfig cfg = grid.front();
    if (grid.size() > 1) {
        std::size_t min_class = std::min(masked.indices_of_label(-1).size(),
                                         masked.indices_of_label(+1).size());
        const int k = static_cast<int>(std::min<std::size_t>(5, min_class));
        if (k >= 2) {
            const FoldPlan folds = stratified_folds(masked, k, substream(seed, "surrogate-folds"));
            cfg = grid_search(masked, grid, folds);
        }
    }
    return train(masked, cfg, mask);
}

SecurityCurve security_curve(const TrainedModel& true_model, const TrainedModel& attacker_model,
                             const Dataset& test_ds, const AttackScenario& scenario) {
    scenario.validate();
    if (test_ds.dim() != true_model.dim())
        throw std::invalid_argument("security_curve: test dimension " + std::to_string(test_ds.dim()) +
                                    " does not match model dimension " + std::to_string(true_model.dim()));
    if (attacker_model.dim() != true_model.dim())
        throw std::invalid_argument("security_curve: attacker model dimension " +
                                    std::to_string(attacker_model.dim()) + " does not match " +
                                    std::to_string(true_model.dim()));

    const OperatingPoint op = calibrate_threshold(true_model, test_ds, scenario.fp_rate);
    const ConstraintSet constraints =
        ConstraintSet::from_domains(test_ds.domains, scenario.monotone_increase);
    const Matrix malicious = test_ds.rows_with_label(+1);
    if (malicious.rows == 0) throw std::invalid_argument("security_curve: no malicious test samples");
    const double max_budget = scenario.budgets.back();

    // Per sample: one descent at the largest budget, then the frontier is
    // replayed for every smaller budget; evasion points chosen against the
    // attacker model are always scored under the true model.
    std::vector<std::vector<char>> detected(malicious.rows,
                                            std::vector<char>(scenario.budgets.size(), 0));
    std::vector<char> errored(malicious.rows, 0);
    parallel_for(malicious.rows, scenario.jobs, [&](std::size_t i) {
        const auto x = malicious.row(i);
        try {
            const AttackFrontier frontier =
                budgeted_descent(attacker_model, x, scenario.kind, constraints, scenario.params,
                                 max_budget);
            for (std::size_t b = 0; b < scenario.budgets.size(); ++b) {
                const FrontierPoint& pick = frontier.best_within(scenario.budgets[b]);
                const double g_true = discriminant(true_model, pick.x);
                detected[i][b] = g_true - op.threshold >= 0.0 ? 1 : 0;
            }
        } catch (const std::exception&) {
            errored[i] = 1;
            const bool keep = discriminant(true_model, x) - op.threshold >= 0.0;
            for (std::size_t b = 0; b < scenario.budgets.size(); ++b) detected[i][b] = keep;
        }
    });

    std::size_t n_errors = 0;
    for (char e : errored) n_errors += e;
    const bool degraded = n_errors * 10 > malicious.rows;

    SecurityCurve curve;
    curve.knowledge = scenario.knowledge;
    curve.mask = true_model.mask();
    for (std::size_t b = 0; b < scenario.budgets.size(); ++b) {
        std::size_t kept = 0;
        for (std::size_t i = 0; i < malicious.rows; ++i) kept += detected[i][b];
        CurvePoint p;
        p.budget = scenario.budgets[b];
        p.tp_mean = static_cast<double>(kept) / static_cast<double>(malicious.rows);
        p.tp_std = 0.0;
        p.n_repeats = 1;
        p.degraded = degraded;
        curve.points.push_back(p);
    }
    return curve;
}

SecurityCurve aggregate_curves(const std::vector<SecurityCurve>& runs) {
    if (runs.empty()) throw std::invalid_argument("aggregate_curves: no curves");
    SecurityCurve out = runs.front();
    const std::size_t nb = out.points.size();
    for (const auto& r : runs)
        if (r.points.size() != nb)
            throw std::invalid_argument("aggregate_curves: curves have different budget grids");

    for (std::size_t b = 0; b < nb; ++b) {
        double mean = 0.0;
        bool degraded = false;
        for (const auto& r : runs) {
            mean += r.points[b].tp_mean;
            degraded = degraded || r.points[b].degraded;
        }
        mean /= static_cast<double>(runs.size());
        double var = 0.0;
        for (const auto& r : runs) {
            const double d = r.points[b].tp_mean - mean;
            var += d * d;
        }
        const double std_dev =
            runs.size() > 1 ? std::sqrt(var / static_cast<double>(runs.size() - 1)) : 0.0;
        out.points[b].tp_mean = mean;
        out.points[b].tp_std = std_dev;
        out.points[b].n_repeats = static_cast<int>(runs.size());
        out.points[b].degraded = degraded;
    }
    return out;
}

namespace {

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> surrogate;
    std::vector<std::size_t> test;
};

// Stratified three-way split: the surrogate slice is disjoint from the
// defender's training data by construction.
SplitIndices split_for_repeat(const Dataset& ds, std::size_t surrogate_size, double train_fraction,
                              std::uint64_t seed) {
    SplitIndices out;
    Rng rng(substream(seed, "split"));
    const std::size_t n = ds.size();
    for (int label : {-1, +1}) {
        auto idx = ds.indices_of_label(label);
        const double frac = static_cast<double>(idx.size()) / static_cast<double>(n);
        rng.shuffle(idx);
        std::size_t n_sur = static_cast<std::size_t>(
            std::llround(frac * static_cast<double>(surrogate_size)));
        n_sur = std::min(n_sur, idx.size() >= 4 ? idx.size() - 4 : std::size_t{0});
        const std::size_t rest = idx.size() - n_sur;
        if (rest < 4)
            throw std::invalid_argument("compare: too few samples per class to split into train/test");
        std::size_t n_train = static_cast<std::size_t>(
            std::llround(train_fraction * static_cast<double>(rest)));
        n_train = std::clamp<std::size_t>(n_train, 2, rest - 2);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (i < n_sur)
                out.surrogate.push_back(idx[i]);
            else if (i < n_sur + n_train)
                out.train.push_back(idx[i]);
            else
                out.test.push_back(idx[i]);
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.surrogate.begin(), out.surrogate.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

}  // namespace

CompareReport compare_selectors(const Dataset& ds, const SelectionConfig& selection,
                                const AttackScenario& scenario, const CompareOptions& opts) {
    scenario.validate();
    CompareReport report;
    report.budgets = scenario.budgets;
    report.repeats = scenario.repeats;
    report.adversarial.name = "adversarial";
    report.traditional.name = "traditional";

    std::vector<SecurityCurve> curves_adv, curves_trad;

    for (int r = 0; r < scenario.repeats; ++r) {
        const std::uint64_t rep_seed = substream(opts.seed, "repeat", static_cast<std::uint64_t>(r));
        const std::size_t surrogate_n =
            scenario.knowledge == Knowledge::limited ? scenario.surrogate_size : 0;
        const SplitIndices split = split_for_repeat(ds, surrogate_n, opts.train_fraction, rep_seed);
        const Dataset train_ds = ds.subset(split.train);
        const Dataset test_ds = ds.subset(split.test);

        SelectionConfig sel = selection;
        sel.seed = substream(rep_seed, "selection");
        sel.fold_plan.reset();

        for (int arm = 0; arm < 2; ++arm) {
            const bool adversarial = arm == 0;
            CompareArm& out = adversarial ? report.adversarial : report.traditional;

            auto [mask, trace] = adversarial ? wafs(train_ds, sel) : traditional_wrapper(train_ds, sel);
            const Dataset train_masked = apply_mask(train_ds, mask);
            TrainConfig cfg = sel.train_grid.front();
            if (sel.train_grid.size() > 1) {
                const FoldPlan folds =
                    stratified_folds(train_masked, sel.folds, substream(rep_seed, "final-folds"));
                cfg = grid_search(train_masked, sel.train_grid, folds);
            }
            const TrainedModel model = train(train_masked, cfg, mask);

            const Dataset test_masked = apply_mask(test_ds, mask);
            TrainedModel attacker = model;
            if (scenario.knowledge == Knowledge::limited) {
                attacker = train_surrogate(ds.subset(split.surrogate), mask, sel.train_grid,
                                           substream(rep_seed, "surrogate"));
            }
            const SecurityCurve curve = security_curve(model, attacker, test_masked, scenario);
            (adversarial ? curves_adv : curves_trad).push_back(curve);

            std::vector<double> tps;
            tps.reserve(curve.points.size());
            for (const auto& p : curve.points) tps.push_back(p.tp_mean);
            out.tp_by_repeat.push_back(tps);
            out.budget0_tp.push_back(curve.points.front().tp_mean);

            const OperatingPoint op = calibrate_threshold(model, test_masked, scenario.fp_rate);
            const ConstraintSet constraints =
                ConstraintSet::from_domains(test_masked.domains, scenario.monotone_increase);
            const Matrix mal = test_masked.rows_with_label(+1);
            const Matrix legit = test_masked.rows_with_label(-1);
            HardnessOptions hopts;
            hopts.threshold = op.threshold;
            hopts.legit_pool = &legit;
            hopts.jobs = scenario.jobs;
            out.hardness.push_back(
                hardness_of_evasion(model, mal, scenario.kind, constraints, scenario.params, hopts)
                    .mean_cost);
            out.masks.push_back(mask);
            out.traces.push_back(std::move(trace));
        }
    }

    report.adversarial.curve = aggregate_curves(curves_adv);
    report.traditional.curve = aggregate_curves(curves_trad);

    // Size summaries from the last repeat's trace prefixes (forward) or
    // elimination order (backward): retrain at each size and score on the
    // final repeat's test split.
    if (opts.size_summaries) {
        const std::uint64_t rep_seed =
            substream(opts.seed, "repeat", static_cast<std::uint64_t>(scenario.repeats - 1));
        const std::size_t surrogate_n =
            scenario.knowledge == Knowledge::limited ? scenario.surrogate_size : 0;
        const SplitIndices split = split_for_repeat(ds, surrogate_n, opts.train_fraction, rep_seed);
        const Dataset train_ds = ds.subset(split.train);
        const Dataset test_ds = ds.subset(split.test);
        for (int arm = 0; arm < 2; ++arm) {
            CompareArm& out = arm == 0 ? report.adversarial : report.traditional;
            if (out.traces.empty()) continue;
            const SelectionTrace& trace = out.traces.back();
            std::vector<std::size_t> order;  // chosen feature per iteration
            for (const auto& rec : trace.records)
                if (rec.chosen) order.push_back(rec.feature);
            const std::size_t d = ds.dim();
            std::vector<FeatureMask> sized_masks;
            if (selection.direction == Direction::forward) {
                std::vector<std::size_t> feats;
                for (std::size_t j = 0; j < order.size(); ++j) {
                    feats.push_back(order[j]);
                    sized_masks.push_back(FeatureMask::from_indices(d, feats));
                }
            } else {
                std::vector<char> present(d, 1);
                for (std::size_t j = 0; j < order.size(); ++j) {
                    present[order[j]] = 0;
                    std::vector<std::size_t> feats;
                    for (std::size_t k = 0; k < d; ++k)
                        if (present[k]) feats.push_back(k);
                    sized_masks.push_back(FeatureMask::from_indices(d, feats));
                }
            }
            for (const auto& mask : sized_masks) {
                try {
                    const Dataset train_masked = apply_mask(train_ds, mask);
                    const Dataset test_masked = apply_mask(test_ds, mask);
                    const TrainedModel model = train(train_masked, selection.train_grid.front(), mask);
                    SizeSummary row;
                    row.subset_size = mask.cardinality();
                    row.g_mean = accuracy(model, test_masked);
                    const OperatingPoint op = calibrate_threshold(model, test_masked, scenario.fp_rate);
                    const ConstraintSet constraints = ConstraintSet::from_domains(
                        test_masked.domains, scenario.monotone_increase);
                    HardnessOptions hopts;
                    hopts.threshold = op.threshold;
                    const Matrix legit = test_masked.rows_with_label(-1);
                    hopts.legit_pool = &legit;
                    hopts.jobs = scenario.jobs;
                    row.s_mean = hardness_of_evasion(model, test_masked.rows_with_label(+1),
                                                     scenario.kind, constraints, scenario.params, hopts)
                                     .mean_cost;
                    out.size_summary.push_back(row);
                } catch (const std::exception&) {
                    // size rows are descriptive; skip sizes that cannot be scored
                }
            }
        }
    }

    // Paired t statistic per budget of the per-repeat TP differences.
    const std::size_t nb = report.budgets.size();
    report.t_statistic.assign(nb, 0.0);
    const int R = scenario.repeats;
    for (std::size_t b = 0; b < nb; ++b) {
        double mean = 0.0;
        for (int r = 0; r < R; ++r)
            mean += report.adversarial.tp_by_repeat[r][b] - report.traditional.tp_by_repeat[r][b];
        mean /= R;
        double var = 0.0;
        for (int r = 0; r < R; ++r) {
            const double d =
                report.adversarial.tp_by_repeat[r][b] - report.traditional.tp_by_repeat[r][b] - mean;
            var += d * d;
        }
        if (R > 1) {
            const double sd = std::sqrt(var / (R - 1));
            report.t_statistic[b] =
                sd > 0.0 ? mean / (sd / std::sqrt(static_cast<double>(R)))
                         : (mean == 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN());
        } else {
            report.t_statistic[b] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return report;
}

}  // namespace advsel
