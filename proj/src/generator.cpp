#include "prro/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include <json.hpp>

#include "prro/csv.hpp"
#include "prro/rng.hpp"

namespace prro {

namespace {

// Type-7 empirical quantile (sorted input, linear interpolation).
double quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<double> sharpened(std::vector<double> probs, double gamma) {
    if (gamma == 1.0) return probs;
    double total = 0.0;
    for (double& p : probs) {
        p = std::pow(p, gamma);
        total += p;
    }
    for (double& p : probs) p /= total;
    return probs;
}

}  // namespace

const std::vector<double>& ChainModel::conditional(std::size_t column) const {
    if (column == 0 || column >= conditionals_.size()) {
        throw ValidationError("conditional tables exist for columns 1..k-1");
    }
    return conditionals_[column];
}

std::size_t ChainModel::state_of(std::size_t column, const Cell& cell) const {
    const ColumnStates& st = states_[column];
    if (cell.is_missing()) {
        // features are imputed at fit time, so only a missing label reaches here
        throw ValidationError("column '" + column_order_[column] +
                              "' has a missing value; the chain needs fully observed rows");
    }
    if (st.kind == ColumnKind::Categorical) {
        const std::int32_t cat = cell.category();
        const auto it = std::lower_bound(st.observed.begin(), st.observed.end(), cat);
        if (it == st.observed.end() || *it != cat) {
            throw ValidationError("category unseen at fit time in column '" +
                                  column_order_[column] + "'");
        }
        return static_cast<std::size_t>(it - st.observed.begin());
    }
    if (st.edges.size() <= 1) return 0;
    const double v = cell.number();
    const auto it = std::upper_bound(st.edges.begin(), st.edges.end(), v);
    const std::ptrdiff_t raw = it - st.edges.begin() - 1;
    const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(st.state_count()) - 1;
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(raw, 0, last));
}

Cell ChainModel::cell_of(std::size_t column, std::size_t state, double unit_draw) const {
    const ColumnStates& st = states_[column];
    if (st.kind == ColumnKind::Categorical) {
        return Cell::category(st.observed[state]);
    }
    if (st.edges.size() <= 1) {
        return Cell::number(st.edges.empty() ? 0.0 : st.edges[0]);
    }
    const double lo = st.edges[state];
    const double hi = st.edges[state + 1];
    return Cell::number(lo + unit_draw * (hi - lo));
}

ChainModel fit_chain(const Dataset& dataset, const ChainConfig& config) {
    if (dataset.row_count() == 0) {
        throw ValidationError("fit_chain requires a non-empty dataset");
    }
    if (config.bins < 2) {
        throw ValidationError("fit_chain requires bins >= 2");
    }
    if (!(config.alpha > 0.0)) {
        throw ValidationError("fit_chain requires alpha > 0");
    }
    if (!(config.sharpen > 0.0)) {
        throw ValidationError("fit_chain requires sharpen > 0");
    }

    const Dataset data = impute_median_mode(dataset);
    const Schema& schema = data.schema();
    const std::size_t k = schema.size();
    const std::size_t n = data.row_count();

    ChainModel model;
    model.schema_ = schema;
    model.alpha_ = config.alpha;
    model.sharpen_ = config.sharpen;
    model.states_.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        model.column_order_.push_back(schema[c].name);
        ChainModel::ColumnStates& st = model.states_[c];
        st.kind = schema[c].kind;
        if (st.kind == ColumnKind::Categorical) {
            std::vector<bool> seen(schema[c].categories.size(), false);
            for (std::size_t r = 0; r < n; ++r) {
                const Cell& cell = data.cell(r, c);
                if (!cell.is_missing()) seen[static_cast<std::size_t>(cell.category())] = true;
            }
            for (std::size_t i = 0; i < seen.size(); ++i) {
                if (seen[i]) st.observed.push_back(static_cast<std::int32_t>(i));
            }
            if (st.observed.empty()) {
                throw ValidationError("column '" + schema[c].name +
                                      "' has no observed categories");
            }
        } else {
            std::vector<double> values;
            values.reserve(n);
            for (std::size_t r = 0; r < n; ++r) values.push_back(data.cell(r, c).number());
            std::sort(values.begin(), values.end());
            std::vector<double> edges;
            for (std::size_t b = 0; b <= config.bins; ++b) {
                const double e =
                    quantile(values, static_cast<double>(b) / static_cast<double>(config.bins));
                if (edges.empty() || e > edges.back()) edges.push_back(e);
            }
            st.edges = std::move(edges);  // one entry => constant column
        }
    }

    // State sequences per row, then smoothed count tables.
    std::vector<std::vector<std::size_t>> row_states(n, std::vector<std::size_t>(k));
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < k; ++c) {
            row_states[r][c] = model.state_of(c, data.cell(r, c));
        }
    }

    const std::size_t s0 = model.states_[0].state_count();
    std::vector<double> counts0(s0, 0.0);
    for (std::size_t r = 0; r < n; ++r) counts0[row_states[r][0]] += 1.0;
    model.marginal_.resize(s0);
    const double denom0 = static_cast<double>(n) + config.alpha * static_cast<double>(s0);
    for (std::size_t s = 0; s < s0; ++s) {
        model.marginal_[s] = (counts0[s] + config.alpha) / denom0;
    }

    model.conditionals_.resize(k);
    for (std::size_t c = 1; c < k; ++c) {
        const std::size_t prev = model.states_[c - 1].state_count();
        const std::size_t curr = model.states_[c].state_count();
        std::vector<double> counts(prev * curr, 0.0);
        std::vector<double> row_totals(prev, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            counts[row_states[r][c - 1] * curr + row_states[r][c]] += 1.0;
            row_totals[row_states[r][c - 1]] += 1.0;
        }
        std::vector<double>& table = model.conditionals_[c];
        table.resize(prev * curr);
        for (std::size_t p = 0; p < prev; ++p) {
            const double denom = row_totals[p] + config.alpha * static_cast<double>(curr);
            for (std::size_t s = 0; s < curr; ++s) {
                table[p * curr + s] = (counts[p * curr + s] + config.alpha) / denom;
            }
        }
    }
    return model;
}

namespace {

// Fills a preallocated row so the sampling loop performs no heap work.
void sample_row_into(const ChainModel& model, std::uint64_t row_seed, Row& row,
                     std::vector<double>& scratch) {
    Rng rng(row_seed);
    const std::size_t k = model.schema().size();
    const double gamma = model.sharpen();

    auto draw = [&](std::span<const double> probs) {
        if (gamma == 1.0) return rng.pick_weighted(probs);
        scratch.assign(probs.begin(), probs.end());
        scratch = sharpened(std::move(scratch), gamma);
        return rng.pick_weighted(scratch);
    };

    std::size_t state = draw(model.marginal());
    row[0] = model.cell_of(0, state, rng.next_unit());
    for (std::size_t c = 1; c < k; ++c) {
        const std::size_t curr = model.states(c).state_count();
        const std::vector<double>& table = model.conditional(c);
        state = draw(std::span<const double>(table.data() + state * curr, curr));
        row[c] = model.cell_of(c, state, rng.next_unit());
    }
}

}  // namespace

Row sample_row(const ChainModel& model, std::uint64_t row_seed) {
    Row row(model.schema().size());
    std::vector<double> scratch;
    sample_row_into(model, row_seed, row, scratch);
    return row;
}

Dataset sample(const ChainModel& model, std::size_t n, std::uint64_t seed) {
    if (n == 0) {
        throw ValidationError("sample requires n >= 1");
    }
    std::vector<Row> rows(n, Row(model.schema().size()));
#pragma omp parallel
    {
        std::vector<double> scratch;
#pragma omp for schedule(static)
        for (std::size_t i = 0; i < n; ++i) {
            sample_row_into(model, derive_seed(seed, static_cast<std::uint64_t>(i)), rows[i],
                            scratch);
        }
    }
    return Dataset(model.schema(), std::move(rows));
}

GowerContext GowerContext::from(const std::vector<const Dataset*>& references) {
    GowerContext ctx;
    if (references.empty() || references[0]->schema().empty()) return ctx;
    const Schema& schema = references[0]->schema();
    ctx.lo.assign(schema.size(), 0.0);
    ctx.hi.assign(schema.size(), 0.0);
    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (schema[c].kind != ColumnKind::Numeric) continue;
        bool any = false;
        for (const Dataset* data : references) {
            for (const Row& row : data->rows()) {
                if (row[c].is_missing()) continue;
                const double v = row[c].number();
                if (!any) {
                    ctx.lo[c] = ctx.hi[c] = v;
                    any = true;
                } else {
                    ctx.lo[c] = std::min(ctx.lo[c], v);
                    ctx.hi[c] = std::max(ctx.hi[c], v);
                }
            }
        }
    }
    return ctx;
}

double gower_distance(const Row& a, const Row& b, const Schema& schema,
                      const GowerContext& context) {
    if (schema.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (a[c].is_missing() || b[c].is_missing()) {
            total += (a[c].is_missing() && b[c].is_missing()) ? 0.0 : 1.0;
            continue;
        }
        if (schema[c].kind == ColumnKind::Numeric) {
            const double range = context.hi[c] - context.lo[c];
            if (range > 0.0) {
                total += std::min(std::abs(a[c].number() - b[c].number()) / range, 1.0);
            } else {
                total += a[c].number() == b[c].number() ? 0.0 : 1.0;
            }
        } else {
            total += a[c].category() == b[c].category() ? 0.0 : 1.0;
        }
    }
    return total / static_cast<double>(schema.size());
}

namespace {

double median_of(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size();
    return m % 2 == 1 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

}  // namespace

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
#pragma omp parallel for schedule(static)
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

    LeakageReport report;
    report.margin = margin;
    report.frac_closer_to_train = n == 0 ? 0.0 : closer / static_cast<double>(n);
    report.median_dcr_train = median_of(dcr_train);
    report.median_dcr_holdout = median_of(dcr_holdout);
    report.flag = report.frac_closer_to_train > 0.5 + margin;
    return report;
}

std::string leakage_report_json(const LeakageReport& report) {
    const nlohmann::json j{{"frac_closer_to_train", report.frac_closer_to_train},
                           {"median_dcr_train", report.median_dcr_train},
                           {"median_dcr_holdout", report.median_dcr_holdout},
                           {"margin", report.margin},
                           {"flag", report.flag}};
    return j.dump(2) + "\n";
}

void bridge_export(const Dataset& dataset, const std::filesystem::path& dir,
                   const EncodeOptions& options) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create bridge directory '" + dir.string() + "'");
    }
    save_corpus(encode_dataset(dataset, options), dir / "corpus.txt");
    save_schema_sidecar(dataset.schema(), dir / "schema.txt");
}

Dataset bridge_import(const std::filesystem::path& dir, const Schema& schema,
                      const ParsePolicy& policy, const EncodeOptions& options) {
    const std::filesystem::path corpus = dir / "generated.txt";
    std::error_code ec;
    if (!std::filesystem::exists(corpus, ec)) {
        throw IoError("bridge output '" + corpus.string() + "' does not exist");
    }
    const CorpusParseResult result =
        parse_corpus(load_corpus_lines(corpus), schema, policy, options);
    if (!result.rejects.empty()) {
        save_rejects(result.rejects, dir / "rejects.jsonl");
    }
    return result.dataset;
}

void run_bridge_command(const std::string& command, const std::filesystem::path& dir) {
    const std::string line = command + " " + dir.string();
    const int status = std::system(line.c_str());
    if (status != 0) {
        throw IoError("bridge command '" + line + "' exited with status " +
                      std::to_string(status));
    }
}

}  // namespace prro
