#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "prro/evaluation.hpp"
#include "prro/table.hpp"

namespace prro {

// Records how columns were rearranged so the transform can be undone in a
// separate invocation. forward maps original index -> new index and is a
// bijection.
struct ColumnPermutation {
    std::vector<std::size_t> forward;
    std::vector<std::string> original_names;

    bool is_identity() const;
    std::vector<std::size_t> inverse() const;
};

void save_permutation(const ColumnPermutation& permutation, const std::filesystem::path& path);
ColumnPermutation load_permutation(const std::filesystem::path& path);

// Applies forward: column at original position i moves to forward[i].
Dataset apply_permutation(const Dataset& dataset, const ColumnPermutation& permutation);

// Moves the label column to the last (first) position, keeping the
// features' relative order. Both are idempotent.
std::pair<Dataset, ColumnPermutation> reorder_predictor_last(const Dataset& dataset);
std::pair<Dataset, ColumnPermutation> reorder_predictor_first(const Dataset& dataset);

struct ImportanceOptions {
    std::uint64_t seed = 0;
    std::size_t repeats = 5;
    double threshold = 0.5;
    bool use_f1 = false;  // score by F1 drop instead of accuracy drop
};

struct FeatureRanking {
    std::vector<std::string> feature_names;  // original feature order
    std::vector<double> scores;              // aligned with feature_names
    std::vector<std::string> order;          // ascending by score (least important first)
};

// Permutation importance: baseline metric minus the mean metric over
// `repeats` shuffles of each feature column. Shuffles draw from per-feature
// derived RNG streams, so scores do not depend on evaluation order.
FeatureRanking permutation_importance(const Classifier& classifier, const Dataset& dataset,
                                      const ImportanceOptions& options = {});

// Features sorted ascending by importance (most important ends up adjacent
// to the label), label last. Ties keep the original feature order.
std::pair<Dataset, ColumnPermutation> reorder_by_importance(const Dataset& dataset,
                                                            const Classifier& classifier,
                                                            const ImportanceOptions& options = {});

// Restores the column order recorded in the permutation exactly.
Dataset inverse_reorder(const Dataset& dataset, const ColumnPermutation& permutation);

namespace detail {
// Stream seed for shuffling feature `feature` on repeat `repeat`; shared by
// the parallel and serial importance implementations.
std::uint64_t importance_stream_seed(std::uint64_t seed, std::size_t feature,
                                     std::size_t repeat);
}  // namespace detail

}  // namespace prro
