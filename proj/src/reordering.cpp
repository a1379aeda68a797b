#include "prro/reordering.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "prro/csv.hpp"
#include "prro/rng.hpp"

namespace prro {

namespace {

void validate_bijection(const std::vector<std::size_t>& forward) {
    std::vector<bool> hit(forward.size(), false);
    for (std::size_t v : forward) {
        if (v >= forward.size() || hit[v]) {
            throw ValidationError("column permutation is not a bijection");
        }
        hit[v] = true;
    }
}

ColumnPermutation make_permutation(const Schema& schema, std::vector<std::size_t> forward) {
    ColumnPermutation permutation;
    permutation.forward = std::move(forward);
    permutation.original_names.reserve(schema.size());
    for (const ColumnSchema& col : schema.columns()) {
        permutation.original_names.push_back(col.name);
    }
    validate_bijection(permutation.forward);
    return permutation;
}

// Builds the forward map that sends the label to `label_target` while
// preserving the features' relative order.
std::vector<std::size_t> label_placement(const Schema& schema, std::size_t label_target) {
    const std::size_t k = schema.size();
    const std::size_t label = schema.label_index();
    std::vector<std::size_t> forward(k);
    std::size_t feature_slot = label_target == 0 ? 1 : 0;
    for (std::size_t i = 0; i < k; ++i) {
        if (i == label) {
            forward[i] = label_target;
        } else {
            if (feature_slot == label_target) ++feature_slot;
            forward[i] = feature_slot++;
        }
    }
    return forward;
}

}  // namespace

bool ColumnPermutation::is_identity() const {
    for (std::size_t i = 0; i < forward.size(); ++i) {
        if (forward[i] != i) return false;
    }
    return true;
}

std::vector<std::size_t> ColumnPermutation::inverse() const {
    std::vector<std::size_t> inv(forward.size());
    for (std::size_t i = 0; i < forward.size(); ++i) inv[forward[i]] = i;
    return inv;
}

void save_permutation(const ColumnPermutation& permutation, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    out << "# prro column permutation\n";
    out << "names=";
    for (std::size_t i = 0; i < permutation.original_names.size(); ++i) {
        if (i) out << '|';
        out << escape_list_item(permutation.original_names[i]);
    }
    out << "\nforward=";
    for (std::size_t i = 0; i < permutation.forward.size(); ++i) {
        if (i) out << '|';
        out << permutation.forward[i];
    }
    out << '\n';
}

ColumnPermutation load_permutation(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    ColumnPermutation permutation;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind("names=", 0) == 0) {
            permutation.original_names = split_escaped_list(line.substr(6));
        } else if (line.rfind("forward=", 0) == 0) {
            for (const std::string& item : split_escaped_list(line.substr(8))) {
                const std::optional<double> v = parse_number(item);
                if (!v) {
                    throw ValidationError(path.string() + ": bad forward entry \"" + item + "\"");
                }
                permutation.forward.push_back(static_cast<std::size_t>(*v));
            }
        }
    }
    if (permutation.forward.size() != permutation.original_names.size()) {
        throw ValidationError(path.string() + ": names/forward length mismatch");
    }
    validate_bijection(permutation.forward);
    return permutation;
}

Dataset apply_permutation(const Dataset& dataset, const ColumnPermutation& permutation) {
    const Schema& schema = dataset.schema();
    if (permutation.forward.size() != schema.size()) {
        throw ValidationError("permutation width does not match dataset");
    }
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (schema[i].name != permutation.original_names[i]) {
            throw ValidationError("permutation was recorded for column '" +
                                  permutation.original_names[i] + "', dataset has '" +
                                  schema[i].name + "' at position " + std::to_string(i));
        }
    }
    std::vector<ColumnSchema> columns(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
        columns[permutation.forward[i]] = schema[i];
    }
    std::vector<Row> rows(dataset.row_count(), Row(schema.size()));
    for (std::size_t r = 0; r < dataset.row_count(); ++r) {
        for (std::size_t c = 0; c < schema.size(); ++c) {
            rows[r][permutation.forward[c]] = dataset.cell(r, c);
        }
    }
    return Dataset(Schema(std::move(columns)), std::move(rows));
}

std::pair<Dataset, ColumnPermutation> reorder_predictor_last(const Dataset& dataset) {
    const ColumnPermutation permutation =
        make_permutation(dataset.schema(), label_placement(dataset.schema(),
                                                           dataset.schema().size() - 1));
    return {apply_permutation(dataset, permutation), permutation};
}

std::pair<Dataset, ColumnPermutation> reorder_predictor_first(const Dataset& dataset) {
    const ColumnPermutation permutation =
        make_permutation(dataset.schema(), label_placement(dataset.schema(), 0));
    return {apply_permutation(dataset, permutation), permutation};
}

namespace detail {

std::uint64_t importance_stream_seed(std::uint64_t seed, std::size_t feature,
                                     std::size_t repeat) {
    return derive_seed(derive_seed(seed, static_cast<std::uint64_t>(feature)),
                       static_cast<std::uint64_t>(repeat) + 0x9e37ULL);
}

}  // namespace detail

namespace {

double importance_metric(const Classifier& classifier, const Dataset& dataset,
                         const std::vector<int>& labels, const ImportanceOptions& options) {
    const std::vector<double> scores = classifier.predict_proba(dataset);
    const MetricReport report = metrics_from_scores(scores, labels, options.threshold);
    return options.use_f1 ? report.f1 : report.accuracy;
}

Dataset shuffled_column(const Dataset& dataset, std::size_t column, Rng& rng) {
    std::vector<std::size_t> order(dataset.row_count());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::vector<Row> rows = dataset.rows();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        rows[r][column] = dataset.cell(order[r], column);
    }
    return Dataset(dataset.schema(), std::move(rows));
}

}  // namespace

FeatureRanking permutation_importance(const Classifier& classifier, const Dataset& dataset,
                                      const ImportanceOptions& options) {
    if (options.repeats == 0) {
        throw ValidationError("permutation importance needs repeats >= 1");
    }
    if (!dataset.schema().same_layout(classifier.schema_binding())) {
        throw ValidationError("dataset layout does not match the classifier's schema");
    }
    const std::vector<double> y =
        [&] {
            std::vector<double> out;
            const std::size_t label = dataset.schema().label_index();
            const std::optional<std::int32_t> positive =
                dataset.schema().label().category_index(classifier.positive_label());
            if (!positive) {
                throw ValidationError("dataset lacks the classifier's positive label");
            }
            for (const Row& row : dataset.rows()) {
                if (row[label].is_missing()) {
                    throw ValidationError("permutation importance: missing label");
                }
                out.push_back(row[label].category() == *positive ? 1.0 : 0.0);
            }
            return out;
        }();
    std::vector<int> labels(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) labels[i] = y[i] > 0.5 ? 1 : 0;

    const std::vector<std::size_t> feature_cols = dataset.schema().feature_indices();
    const double baseline = importance_metric(classifier, dataset, labels, options);

    FeatureRanking ranking;
    ranking.feature_names.reserve(feature_cols.size());
    for (std::size_t f : feature_cols) {
        ranking.feature_names.push_back(dataset.schema()[f].name);
    }
    ranking.scores.assign(feature_cols.size(), 0.0);

    // Each feature draws from its own derived stream, so the scores are
    // independent of evaluation order and safe to compute in parallel.
#pragma omp parallel for schedule(dynamic)
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
        double mean_permuted = 0.0;
        for (std::size_t rep = 0; rep < options.repeats; ++rep) {
            Rng rng(detail::importance_stream_seed(options.seed, f, rep));
            const Dataset shuffled = shuffled_column(dataset, feature_cols[f], rng);
            mean_permuted += importance_metric(classifier, shuffled, labels, options);
        }
        mean_permuted /= static_cast<double>(options.repeats);
        ranking.scores[f] = baseline - mean_permuted;
    }

    std::vector<std::size_t> order(feature_cols.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return ranking.scores[a] < ranking.scores[b];
    });
    for (std::size_t i : order) ranking.order.push_back(ranking.feature_names[i]);
    return ranking;
}

std::pair<Dataset, ColumnPermutation> reorder_by_importance(const Dataset& dataset,
                                                            const Classifier& classifier,
                                                            const ImportanceOptions& options) {
    const FeatureRanking ranking = permutation_importance(classifier, dataset, options);
    const Schema& schema = dataset.schema();
    const std::size_t k = schema.size();

    // New layout: features ascending by importance, label last.
    std::vector<std::size_t> forward(k);
    forward[schema.label_index()] = k - 1;
    std::size_t slot = 0;
    for (const std::string& name : ranking.order) {
        const std::optional<std::size_t> idx = schema.index_of(name);
        forward[*idx] = slot++;
    }
    const ColumnPermutation permutation = make_permutation(schema, std::move(forward));
    return {apply_permutation(dataset, permutation), permutation};
}

Dataset inverse_reorder(const Dataset& dataset, const ColumnPermutation& permutation) {
    const Schema& schema = dataset.schema();
    if (permutation.forward.size() != schema.size()) {
        throw ValidationError("permutation width does not match dataset");
    }
    // The dataset must currently sit in the permutation's target layout.
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (schema[permutation.forward[i]].name != permutation.original_names[i]) {
            throw ValidationError("dataset column '" + schema[permutation.forward[i]].name +
                                  "' does not match recorded column '" +
                                  permutation.original_names[i] + "'");
        }
    }
    const std::vector<std::size_t> inverse = permutation.inverse();
    std::vector<ColumnSchema> columns(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
        columns[inverse[i]] = schema[i];
    }
    std::vector<Row> rows(dataset.row_count(), Row(schema.size()));
    for (std::size_t r = 0; r < dataset.row_count(); ++r) {
        for (std::size_t c = 0; c < schema.size(); ++c) {
            rows[r][inverse[c]] = dataset.cell(r, c);
        }
    }
    return Dataset(Schema(std::move(columns)), std::move(rows));
}

}  // namespace prro
