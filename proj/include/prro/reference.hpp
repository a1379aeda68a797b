#pragma once

#include "prro/generator.hpp"
#include "prro/pruning.hpp"
#include "prro/reordering.hpp"

namespace prro::reference {

// Serial counterparts of the OpenMP kernels. They share the numeric cores
// with the parallel paths (the orchestration is what differs), so results
// must match exactly; the unit tests and the benchmark tool hold them to
// that.

std::pair<Dataset, PruneReport> prune_signal(const Dataset& dataset, const PruningConfig& config);

Dataset sample(const ChainModel& model, std::size_t n, std::uint64_t seed);

LeakageReport leakage_check(const Dataset& synthetic, const Dataset& train,
                            const Dataset& holdout, double margin = 0.1);

FeatureRanking permutation_importance(const Classifier& classifier, const Dataset& dataset,
                                      const ImportanceOptions& options = {});

}  // namespace prro::reference
