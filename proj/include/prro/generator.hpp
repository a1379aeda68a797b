#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "prro/encoding.hpp"
#include "prro/table.hpp"

namespace prro {

struct ChainConfig {
    std::size_t bins = 8;   // quantile bins per numeric column
    double alpha = 1.0;     // Laplace pseudo-count
    double sharpen = 1.0;   // sampling exponent; > 1 is mode-seeking and
                            // shrinks minority states the way large
                            // sequence generators tend to
};

// First-order conditional generator over an explicit column order: a
// smoothed marginal for the first column and a conditional table
// P(state_j | state_{j-1}) for each later column. Numeric columns are
// discretized by empirical quantiles; categorical states are the
// categories observed at fit time. Fitting the same data in a different
// column order generally yields a different model, which is what makes
// column reordering visible to it.
class ChainModel {
public:
    struct ColumnStates {
        ColumnKind kind = ColumnKind::Numeric;
        // Numeric: ascending cut points including min and max; a single
        // entry marks the degenerate constant column. State s spans
        // [edges[s], edges[s+1]).
        std::vector<double> edges;
        // Categorical: observed category indices, ascending.
        std::vector<std::int32_t> observed;

        std::size_t state_count() const {
            if (kind == ColumnKind::Categorical) return observed.size();
            return edges.size() <= 1 ? 1 : edges.size() - 1;
        }
    };

    const Schema& schema() const { return schema_; }
    const std::vector<std::string>& column_order() const { return column_order_; }
    const ColumnStates& states(std::size_t column) const { return states_[column]; }
    const std::vector<double>& marginal() const { return marginal_; }
    // Row-major [prev_state * state_count(column) + state], column >= 1.
    const std::vector<double>& conditional(std::size_t column) const;
    double alpha() const { return alpha_; }
    double sharpen() const { return sharpen_; }

    std::size_t state_of(std::size_t column, const Cell& cell) const;
    Cell cell_of(std::size_t column, std::size_t state, double unit_draw) const;

private:
    friend ChainModel fit_chain(const Dataset&, const ChainConfig&);
    Schema schema_;
    std::vector<std::string> column_order_;
    std::vector<ColumnStates> states_;
    std::vector<double> marginal_;
    std::vector<std::vector<double>> conditionals_;  // index 0 unused
    double alpha_ = 1.0;
    double sharpen_ = 1.0;
};

ChainModel fit_chain(const Dataset& dataset, const ChainConfig& config);

// Draws n rows left-to-right along the fitted column order. Numeric cells
// are sampled uniformly within their bin. Each row uses its own derived
// RNG stream, so the output is independent of parallelism.
Dataset sample(const ChainModel& model, std::size_t n, std::uint64_t seed);

// One row from its derived stream; the unit both sample() and the serial
// reference are built from.
Row sample_row(const ChainModel& model, std::uint64_t row_seed);

// Mixed-type Gower distance context: numeric ranges taken over the
// reference rows, per-column contributions clamped to [0,1].
struct GowerContext {
    std::vector<double> lo, hi;  // per column (categorical entries unused)

    static GowerContext from(const std::vector<const Dataset*>& references);
};

double gower_distance(const Row& a, const Row& b, const Schema& schema,
                      const GowerContext& context);

struct LeakageReport {
    double frac_closer_to_train = 0.0;  // ties count 0.5
    double median_dcr_train = 0.0;
    double median_dcr_holdout = 0.0;
    double margin = 0.1;
    bool flag = false;  // frac_closer_to_train > 0.5 + margin
};

// Distance-to-closest-record comparison of the synthetic rows against the
// generator's training data and the withheld holdout. A synthetic set that
// hugs the training rows much more often than the holdout indicates the
// generator leaked its training data.
LeakageReport leakage_check(const Dataset& synthetic, const Dataset& train,
                            const Dataset& holdout, double margin = 0.1);

std::string leakage_report_json(const LeakageReport& report);

// File bridge for external sequence generators. Export writes corpus.txt
// (sentence encoding) and schema.txt; import parses generated.txt in the
// same format. When command is non-empty it is invoked as `command <dir>`
// between the two and must exit 0; PRRO_BRIDGE_CMD supplies a default.
void bridge_export(const Dataset& dataset, const std::filesystem::path& dir,
                   const EncodeOptions& options = {});
Dataset bridge_import(const std::filesystem::path& dir, const Schema& schema,
                      const ParsePolicy& policy, const EncodeOptions& options = {});
void run_bridge_command(const std::string& command, const std::filesystem::path& dir);

}  // namespace prro
