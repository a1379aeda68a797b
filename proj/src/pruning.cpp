#include "prro/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>

#include "prro/csv.hpp"
#include "prro/rng.hpp"

namespace prro {

namespace {

// Encodes a row's feature cells as doubles: numeric values as-is,
// categories as ordinal codes (config override or schema order).
struct FeatureEncoder {
    const Schema& schema;
    std::vector<std::size_t> feature_cols;
    std::vector<std::vector<double>> codes;  // per feature column, per category

    FeatureEncoder(const Schema& s, const PruningConfig& config)
        : schema(s), feature_cols(s.feature_indices()), codes(feature_cols.size()) {
        for (std::size_t f = 0; f < feature_cols.size(); ++f) {
            const ColumnSchema& col = schema[feature_cols[f]];
            if (col.kind != ColumnKind::Categorical) continue;
            codes[f].resize(col.categories.size());
            const auto map_it = config.ordinal_maps.find(col.name);
            for (std::size_t i = 0; i < col.categories.size(); ++i) {
                codes[f][i] = static_cast<double>(i);
                if (map_it != config.ordinal_maps.end()) {
                    const auto code_it = map_it->second.find(col.categories[i]);
                    if (code_it == map_it->second.end()) {
                        throw ValidationError("ordinal map for column '" + col.name +
                                              "' lacks category '" + col.categories[i] + "'");
                    }
                    codes[f][i] = static_cast<double>(code_it->second);
                }
            }
        }
    }

    std::vector<double> encode(const Row& row) const {
        std::vector<double> values(feature_cols.size());
        for (std::size_t f = 0; f < feature_cols.size(); ++f) {
            const Cell& cell = row[feature_cols[f]];
            if (cell.is_missing()) {
                throw ValidationError("row correlation requires fully observed features");
            }
            values[f] = codes[f].empty() ? cell.number()
                                         : codes[f][static_cast<std::size_t>(cell.category())];
        }
        return values;
    }
};

// Average ranks (1-based); equal values share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

SpearmanResult pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_a += a[i];
        mean_b += b[i];
    }
    mean_a /= static_cast<double>(n);
    mean_b /= static_cast<double>(n);

    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a == 0.0 || var_b == 0.0) {
        return SpearmanResult{0.0, false};
    }
    const double r = cov / std::sqrt(var_a * var_b);
    return SpearmanResult{std::clamp(r, -1.0, 1.0), true};
}

}  // namespace

SpearmanResult spearman_row_correlation(const Row& a, const Row& b, const Schema& schema,
                                        const PruningConfig& config) {
    const FeatureEncoder encoder(schema, config);
    if (encoder.feature_cols.size() < 2) {
        throw ValidationError("row correlation needs at least 2 feature columns");
    }
    return pearson(average_ranks(encoder.encode(a)), average_ranks(encoder.encode(b)));
}

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
    std::vector<std::size_t> interest_rows;
    std::vector<std::size_t> other_rows;
    for (std::size_t r = 0; r < dataset.row_count(); ++r) {
        const Cell& cell = dataset.cell(r, label_idx);
        if (!cell.is_missing() && cell.category() == *interest) {
            interest_rows.push_back(r);
        } else {
            other_rows.push_back(r);
        }
    }
    if (interest_rows.empty()) {
        throw ValidationError("interest class is empty; nothing to prune against");
    }

    const FeatureEncoder encoder(schema, config);
    if (encoder.feature_cols.size() < 2) {
        throw ValidationError("prune_signal needs at least 2 feature columns");
    }

    std::size_t comparisons = interest_rows.size();
    if (config.max_interest_comparisons && *config.max_interest_comparisons < comparisons) {
        comparisons = *config.max_interest_comparisons;
        std::cerr << "prune_signal: comparing against only " << comparisons << " of "
                  << interest_rows.size() << " interest rows (cap)\n";
    }

    // Rank transforms are per-row and reused across every pairing.
    const Dataset imputed = impute_median_mode(dataset);
    std::vector<std::vector<double>> interest_ranks(interest_rows.size());
    for (std::size_t i = 0; i < interest_rows.size(); ++i) {
        interest_ranks[i] = average_ranks(encoder.encode(imputed.row(interest_rows[i])));
    }
    std::vector<std::vector<double>> other_ranks(other_rows.size());
    std::vector<std::uint8_t> admitted(other_rows.size(), 0);

#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t i = 0; i < other_rows.size(); ++i) {
        other_ranks[i] = average_ranks(encoder.encode(imputed.row(other_rows[i])));
        for (std::size_t j = 0; j < comparisons; ++j) {
            const SpearmanResult corr = pearson(other_ranks[i], interest_ranks[j]);
            if (corr.defined && corr.value > config.tau) {
                admitted[i] = 1;
                break;
            }
        }
    }

    std::vector<Row> rows;
    rows.reserve(interest_rows.size());
    for (std::size_t r : interest_rows) rows.push_back(dataset.row(r));
    std::size_t kept_correlated = 0;
    for (std::size_t i = 0; i < other_rows.size(); ++i) {
        if (admitted[i]) {
            rows.push_back(dataset.row(other_rows[i]));
            ++kept_correlated;
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

std::string prune_report_text(const PruneReport& report) {
    std::ostringstream out;
    out << "source_rows=" << report.source_rows << '\n'
        << "kept_interest=" << report.kept_interest << '\n'
        << "kept_correlated=" << report.kept_correlated << '\n'
        << "pruned=" << report.pruned << '\n'
        << "resulting_positive_rate=" << format_number(report.resulting_positive_rate) << '\n'
        << "tau=" << format_number(report.tau) << '\n';
    return out.str();
}

PruneReport parse_prune_report(const std::string& text) {
    PruneReport report;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        const std::optional<double> num = parse_number(value);
        if (!num) continue;
        if (key == "source_rows") report.source_rows = static_cast<std::size_t>(*num);
        else if (key == "kept_interest") report.kept_interest = static_cast<std::size_t>(*num);
        else if (key == "kept_correlated") report.kept_correlated = static_cast<std::size_t>(*num);
        else if (key == "pruned") report.pruned = static_cast<std::size_t>(*num);
        else if (key == "resulting_positive_rate") report.resulting_positive_rate = *num;
        else if (key == "tau") report.tau = *num;
    }
    return report;
}

namespace {

struct BinaryLabelSplit {
    std::int32_t majority_category = 0;
    std::int32_t minority_category = 0;
    std::vector<std::size_t> majority_rows;
    std::vector<std::size_t> minority_rows;
};

BinaryLabelSplit split_two_classes(const Dataset& dataset, const char* op) {
    const ColumnSchema& label_col = dataset.schema().label();
    if (label_col.kind != ColumnKind::Categorical) {
        throw ValidationError(std::string(op) + " requires a categorical label column");
    }
    const std::size_t label_idx = dataset.schema().label_index();
    std::map<std::int32_t, std::vector<std::size_t>> by_class;
    for (std::size_t r = 0; r < dataset.row_count(); ++r) {
        const Cell& cell = dataset.cell(r, label_idx);
        if (cell.is_missing()) {
            throw ValidationError(std::string(op) + ": row " + std::to_string(r) +
                                  " has a missing label");
        }
        by_class[cell.category()].push_back(r);
    }
    if (by_class.size() != 2) {
        throw ValidationError(std::string(op) + " requires exactly two label classes, found " +
                              std::to_string(by_class.size()));
    }
    auto first = by_class.begin();
    auto second = std::next(first);
    BinaryLabelSplit out;
    if (first->second.size() >= second->second.size()) {
        out.majority_category = first->first;
        out.minority_category = second->first;
        out.majority_rows = std::move(first->second);
        out.minority_rows = std::move(second->second);
    } else {
        out.majority_category = second->first;
        out.minority_category = first->first;
        out.majority_rows = std::move(second->second);
        out.minority_rows = std::move(first->second);
    }
    return out;
}

}  // namespace

Dataset random_undersample(const Dataset& dataset, double target_majority_ratio,
                           std::uint64_t seed) {
    if (!(target_majority_ratio > 0.0 && target_majority_ratio < 1.0)) {
        throw ValidationError("target majority ratio must lie in (0,1)");
    }
    const BinaryLabelSplit classes = split_two_classes(dataset, "random_undersample");
    const double minority = static_cast<double>(classes.minority_rows.size());
    // Epsilon absorbs the representation error of ratios like 0.98 so a
    // target equal to the current ratio keeps the dataset intact.
    const std::size_t keep = static_cast<std::size_t>(
        std::floor(minority * target_majority_ratio / (1.0 - target_majority_ratio) + 1e-9));
    if (keep > classes.majority_rows.size()) {
        throw ValidationError("target ratio needs " + std::to_string(keep) +
                              " majority rows but only " +
                              std::to_string(classes.majority_rows.size()) + " exist");
    }

    std::vector<std::size_t> pool = classes.majority_rows;
    Rng rng(seed);
    rng.shuffle(pool);
    pool.resize(keep);

    std::vector<std::uint8_t> keep_row(dataset.row_count(), 0);
    for (std::size_t r : classes.minority_rows) keep_row[r] = 1;
    for (std::size_t r : pool) keep_row[r] = 1;

    std::vector<Row> rows;
    rows.reserve(classes.minority_rows.size() + keep);
    for (std::size_t r = 0; r < dataset.row_count(); ++r) {
        if (keep_row[r]) rows.push_back(dataset.row(r));
    }
    return Dataset(dataset.schema(), std::move(rows));
}

namespace {

// Distance-space featurization for k-means: z-scored numerics, one-hot
// categoricals, stats taken over the rows being clustered.
struct DistanceSpace {
    std::vector<std::size_t> feature_cols;
    std::vector<double> means, scales;       // numeric columns (0 for categorical)
    std::vector<std::size_t> offsets;        // start of each column's block
    std::size_t width = 0;

    DistanceSpace(const Dataset& data, const std::vector<std::size_t>& member_rows) {
        const Schema& schema = data.schema();
        feature_cols = schema.feature_indices();
        means.assign(feature_cols.size(), 0.0);
        scales.assign(feature_cols.size(), 1.0);
        offsets.resize(feature_cols.size());
        for (std::size_t f = 0; f < feature_cols.size(); ++f) {
            const ColumnSchema& col = schema[feature_cols[f]];
            offsets[f] = width;
            if (col.kind == ColumnKind::Numeric) {
                width += 1;
                double sum = 0.0, sq = 0.0;
                for (std::size_t r : member_rows) {
                    const double v = data.cell(r, feature_cols[f]).number();
                    sum += v;
                    sq += v * v;
                }
                const double n = static_cast<double>(member_rows.size());
                means[f] = sum / n;
                const double var = std::max(sq / n - means[f] * means[f], 0.0);
                scales[f] = var > 0.0 ? std::sqrt(var) : 1.0;
            } else {
                width += col.categories.size();
            }
        }
    }

    std::vector<double> embed(const Dataset& data, std::size_t row) const {
        std::vector<double> v(width, 0.0);
        for (std::size_t f = 0; f < feature_cols.size(); ++f) {
            const Cell& cell = data.cell(row, feature_cols[f]);
            if (data.schema()[feature_cols[f]].kind == ColumnKind::Numeric) {
                v[offsets[f]] = (cell.number() - means[f]) / scales[f];
            } else {
                v[offsets[f] + static_cast<std::size_t>(cell.category())] = 1.0;
            }
        }
        return v;
    }
};

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

}  // namespace

std::size_t minority_count(const Dataset& dataset) {
    return split_two_classes(dataset, "minority_count").minority_rows.size();
}

Dataset cluster_centroids(const Dataset& dataset, std::size_t k, std::uint64_t seed,
                          KMeansDiagnostics* diagnostics) {
    if (k == 0) {
        throw ValidationError("cluster count k must be positive");
    }
    const BinaryLabelSplit classes = split_two_classes(dataset, "cluster_centroids");
    if (classes.majority_rows.empty()) {
        throw ValidationError("cluster_centroids: empty majority class");
    }
    if (k > classes.majority_rows.size()) {
        throw ValidationError("k exceeds the majority row count");
    }

    const Dataset imputed = impute_median_mode(dataset);
    const DistanceSpace space(imputed, classes.majority_rows);
    const std::size_t n = classes.majority_rows.size();
    std::vector<std::vector<double>> points(n);
    for (std::size_t i = 0; i < n; ++i) {
        points[i] = space.embed(imputed, classes.majority_rows[i]);
    }

    std::vector<std::size_t> init(n);
    std::iota(init.begin(), init.end(), 0);
    Rng rng(seed);
    rng.shuffle(init);
    std::vector<std::vector<double>> centroids(k);
    for (std::size_t c = 0; c < k; ++c) centroids[c] = points[init[c]];

    std::vector<std::size_t> assignment(n, 0);
    constexpr std::size_t kMaxIterations = 100;
    for (std::size_t iter = 0; iter < kMaxIterations; ++iter) {
        bool changed = false;
        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_dist = squared_distance(points[i], centroids[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = squared_distance(points[i], centroids[c]);
                if (d < best_dist) {
                    best = c;
                    best_dist = d;
                }
            }
            objective += best_dist;
            if (assignment[i] != best) {
                assignment[i] = best;
                changed = true;
            }
        }
        if (diagnostics) {
            diagnostics->objective.push_back(objective);
            diagnostics->iterations = iter + 1;
        }
        if (!changed && iter > 0) break;

        std::vector<std::vector<double>> sums(k, std::vector<double>(space.width, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[assignment[i]];
            for (std::size_t d = 0; d < space.width; ++d) sums[assignment[i]][d] += points[i][d];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // Re-seed an empty cluster with the point farthest from its centroid.
                std::size_t farthest = 0;
                double far_dist = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = squared_distance(points[i], centroids[assignment[i]]);
                    if (d > far_dist) {
                        far_dist = d;
                        farthest = i;
                    }
                }
                centroids[c] = points[farthest];
                assignment[farthest] = c;
            } else {
                for (std::size_t d = 0; d < space.width; ++d) {
                    centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
                }
            }
        }
    }

    // Materialize centroids in the original value space.
    const Schema& schema = dataset.schema();
    const std::size_t label_idx = schema.label_index();
    std::vector<Row> centroid_rows(k, Row(schema.size()));
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i) {
            if (assignment[i] == c) members.push_back(classes.majority_rows[i]);
        }
        for (std::size_t f : schema.feature_indices()) {
            if (schema[f].kind == ColumnKind::Numeric) {
                double sum = 0.0;
                for (std::size_t r : members) sum += imputed.cell(r, f).number();
                centroid_rows[c][f] =
                    Cell::number(members.empty() ? 0.0 : sum / static_cast<double>(members.size()));
            } else {
                std::vector<std::size_t> tally(schema[f].categories.size(), 0);
                for (std::size_t r : members) {
                    ++tally[static_cast<std::size_t>(imputed.cell(r, f).category())];
                }
                std::size_t mode = 0;
                for (std::size_t i = 1; i < tally.size(); ++i) {
                    if (tally[i] > tally[mode]) mode = i;
                }
                centroid_rows[c][f] = Cell::category(static_cast<std::int32_t>(mode));
            }
        }
        centroid_rows[c][label_idx] = Cell::category(classes.majority_category);
    }

    std::vector<Row> rows;
    rows.reserve(classes.minority_rows.size() + k);
    for (std::size_t r : classes.minority_rows) rows.push_back(dataset.row(r));
    for (Row& row : centroid_rows) rows.push_back(std::move(row));
    return Dataset(schema, std::move(rows));
}

}  // namespace prro
