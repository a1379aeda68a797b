#include "prro/reference.hpp"

#include <algorithm>
#include <numeric>

#include "prro/rng.hpp"

namespace prro::reference {

std::pair<Dataset, PruneReport> prune_signal(const Dataset& dataset,
                                             const PruningConfig& config) {
    const Schema& schema = dataset.schema();
    const ColumnSchema& label_col = schema.label();
    if (label_col.kind != ColumnKind::Categorical) {
        throw ValidationError("prune_signal requires a categorical label column");
    }
    if (!(config.tau > -1.0 && config.tau < 1.0)) {
        throw ValidationError("tau must lie strictly inside (-1, 1)");
    }
    const std::optional<std::int32_t> interest = label_col.category_index(config.interest_label);
    if (!interest) {
        throw ValidationError("unknown interest label '" + config.interest_label + "'");
    }

    const std::size_t label_idx = schema.label_index();
    std::vector<std::size_t> interest_rows, other_rows;
    for (std::size_t r = 0; r < dataset.row_count(); ++r) {
        const Cell& cell = dataset.cell(r, label_idx);
        if (!cell.is_missing() && cell.category() == *interest) interest_rows.push_back(r);
        else other_rows.push_back(r);
    }
    if (interest_rows.empty()) {
        throw ValidationError("interest class is empty; nothing to prune against");
    }

    std::size_t comparisons = interest_rows.size();
    if (config.max_interest_comparisons && *config.max_interest_comparisons < comparisons) {
        comparisons = *config.max_interest_comparisons;
    }

    const Dataset imputed = impute_median_mode(dataset);
    std::vector<Row> rows;
    for (std::size_t r : interest_rows) rows.push_back(dataset.row(r));
    std::size_t kept_correlated = 0;
    for (std::size_t r : other_rows) {
        for (std::size_t j = 0; j < comparisons; ++j) {
            const SpearmanResult corr = spearman_row_correlation(
                imputed.row(r), imputed.row(interest_rows[j]), schema, config);
            if (corr.defined && corr.value > config.tau) {
                rows.push_back(dataset.row(r));
                ++kept_correlated;
                break;
            }
        }
    }

    PruneReport report;
    report.kept_interest = interest_rows.size();
    report.kept_correlated = kept_correlated;
    report.source_rows = dataset.row_count();
    report.pruned = dataset.row_count() - interest_rows.size() - kept_correlated;
    report.tau = config.tau;
    report.resulting_positive_rate =
        static_cast<double>(interest_rows.size()) / static_cast<double>(rows.size());
    return {Dataset(schema, std::move(rows)), report};
}

Dataset sample(const ChainModel& model, std::size_t n, std::uint64_t seed) {
    if (n == 0) {
        throw ValidationError("sample requires n >= 1");
    }
    std::vector<Row> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        rows[i] = sample_row(model, derive_seed(seed, static_cast<std::uint64_t>(i)));
    }
    return Dataset(model.schema(), std::move(rows));
}

LeakageReport leakage_check(const Dataset& synthetic, const Dataset& train,
                            const Dataset& holdout, double margin) {
    if (!synthetic.schema().same_layout(train.schema()) ||
        !synthetic.schema().same_layout(holdout.schema())) {
        throw ValidationError("leakage_check requires a shared schema layout");
    }
    if (train.row_count() == 0 || holdout.row_count() == 0) {
        throw ValidationError("leakage_check requires non-empty train and holdout sets");
    }
    const std::size_t n = synthetic.row_count();
    const GowerContext ctx = GowerContext::from({&train, &holdout});
    const Schema& schema = synthetic.schema();

    std::vector<double> dcr_train(n), dcr_holdout(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Row& row = synthetic.row(i);
        double best_train = 2.0;
        for (const Row& ref : train.rows()) {
            best_train = std::min(best_train, gower_distance(row, ref, schema, ctx));
        }
        double best_holdout = 2.0;
        for (const Row& ref : holdout.rows()) {
            best_holdout = std::min(best_holdout, gower_distance(row, ref, schema, ctx));
        }
        dcr_train[i] = best_train;
        dcr_holdout[i] = best_holdout;
    }

    double closer = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (dcr_train[i] < dcr_holdout[i]) closer += 1.0;
        else if (dcr_train[i] == dcr_holdout[i]) closer += 0.5;
    }

    auto median_of = [](std::vector<double> values) {
        if (values.empty()) return 0.0;
        std::sort(values.begin(), values.end());
        const std::size_t m = values.size();
        return m % 2 == 1 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
    };

    LeakageReport report;
    report.margin = margin;
    report.frac_closer_to_train = n == 0 ? 0.0 : closer / static_cast<double>(n);
    report.median_dcr_train = median_of(dcr_train);
    report.median_dcr_holdout = median_of(dcr_holdout);
    report.flag = report.frac_closer_to_train > 0.5 + margin;
    return report;
}

FeatureRanking permutation_importance(const Classifier& classifier, const Dataset& dataset,
                                      const ImportanceOptions& options) {
    if (options.repeats == 0) {
        throw ValidationError("permutation importance needs repeats >= 1");
    }
    if (!dataset.schema().same_layout(classifier.schema_binding())) {
        throw ValidationError("dataset layout does not match the classifier's schema");
    }
    const std::size_t label = dataset.schema().label_index();
    const std::optional<std::int32_t> positive =
        dataset.schema().label().category_index(classifier.positive_label());
    if (!positive) {
        throw ValidationError("dataset lacks the classifier's positive label");
    }
    std::vector<int> labels;
    for (const Row& row : dataset.rows()) {
        if (row[label].is_missing()) {
            throw ValidationError("permutation importance: missing label");
        }
        labels.push_back(row[label].category() == *positive ? 1 : 0);
    }

    auto metric = [&](const Dataset& d) {
        const MetricReport report =
            metrics_from_scores(classifier.predict_proba(d), labels, options.threshold);
        return options.use_f1 ? report.f1 : report.accuracy;
    };

    const std::vector<std::size_t> feature_cols = dataset.schema().feature_indices();
    const double baseline = metric(dataset);

    FeatureRanking ranking;
    for (std::size_t f : feature_cols) {
        ranking.feature_names.push_back(dataset.schema()[f].name);
    }
    ranking.scores.assign(feature_cols.size(), 0.0);

    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
        double mean_permuted = 0.0;
        for (std::size_t rep = 0; rep < options.repeats; ++rep) {
            Rng rng(detail::importance_stream_seed(options.seed, f, rep));
            std::vector<std::size_t> order(dataset.row_count());
            std::iota(order.begin(), order.end(), 0);
            rng.shuffle(order);
            std::vector<Row> rows = dataset.rows();
            for (std::size_t r = 0; r < rows.size(); ++r) {
                rows[r][feature_cols[f]] = dataset.cell(order[r], feature_cols[f]);
            }
            mean_permuted += metric(Dataset(dataset.schema(), std::move(rows)));
        }
        ranking.scores[f] = baseline - mean_permuted / static_cast<double>(options.repeats);
    }

    std::vector<std::size_t> order(feature_cols.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return ranking.scores[a] < ranking.scores[b];
    });
    for (std::size_t i : order) ranking.order.push_back(ranking.feature_names[i]);
    return ranking;
}

}  // namespace prro::reference
