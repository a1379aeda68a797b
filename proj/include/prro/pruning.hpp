#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "prro/table.hpp"

namespace prro {

struct PruningConfig {
    double tau = 0.3;
    std::string interest_label;
    // Ordinal code per category, per categorical feature column. Columns
    // absent from the map encode categories by schema order.
    std::map<std::string, std::map<std::string, std::int32_t>> ordinal_maps;
    // Caps the number of interest rows each non-interest row is compared
    // against; warns on stderr when it truncates.
    std::optional<std::size_t> max_interest_comparisons;
};

struct PruneReport {
    std::size_t kept_interest = 0;    // |interest class|
    std::size_t kept_correlated = 0;  // admitted non-interest rows
    std::size_t pruned = 0;
    std::size_t source_rows = 0;
    double resulting_positive_rate = 0.0;
    double tau = 0.0;
};

struct SpearmanResult {
    double value = 0.0;
    bool defined = false;  // false when either rank vector has zero variance
};

// Spearman rank correlation between the feature vectors of two rows:
// Pearson correlation of their average-rank transforms, with categorical
// cells entering as ordinal codes. Rows must be fully observed.
SpearmanResult spearman_row_correlation(const Row& a, const Row& b, const Schema& schema,
                                        const PruningConfig& config);

// Keeps every interest-class row plus each non-interest row whose Spearman
// correlation with at least one interest row exceeds tau (first success
// ends that row's scan). Correlations are computed on a median/mode-imputed
// copy; emitted rows are the untouched originals, interest rows first, both
// groups in original order. Parallelized across non-interest rows.
std::pair<Dataset, PruneReport> prune_signal(const Dataset& dataset, const PruningConfig& config);

std::string prune_report_text(const PruneReport& report);
PruneReport parse_prune_report(const std::string& text);

// Keeps all minority rows and a seeded without-replacement sample of the
// majority sized so the majority share of the result is the target ratio
// (rounded down). Row order is preserved.
Dataset random_undersample(const Dataset& dataset, double target_majority_ratio,
                           std::uint64_t seed);

struct KMeansDiagnostics {
    std::vector<double> objective;  // after each assignment pass
    std::size_t iterations = 0;
};

// Replaces the majority class with k Lloyd's-algorithm centroids computed
// in z-scored / one-hot space: per-cluster numeric means and modal
// categories. Minority rows pass through untouched.
Dataset cluster_centroids(const Dataset& dataset, std::size_t k, std::uint64_t seed,
                          KMeansDiagnostics* diagnostics = nullptr);

// Size of the smaller label class; the balancing default for k above.
std::size_t minority_count(const Dataset& dataset);

}  // namespace prro
