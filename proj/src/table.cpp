#include "prro/table.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "prro/rng.hpp"

namespace prro {

Cell Cell::number(double value) {
    if (!std::isfinite(value)) {
        throw ValidationError("numeric cell must be finite");
    }
    Cell c;
    c.tag_ = Tag::Number;
    c.number_ = value;
    return c;
}

Cell Cell::category(std::int32_t index) {
    if (index < 0) {
        throw ValidationError("category index must be nonnegative");
    }
    Cell c;
    c.tag_ = Tag::Category;
    c.category_ = index;
    return c;
}

double Cell::number() const {
    if (tag_ != Tag::Number) throw ValidationError("cell is not numeric");
    return number_;
}

std::int32_t Cell::category() const {
    if (tag_ != Tag::Category) throw ValidationError("cell is not categorical");
    return category_;
}

bool Cell::operator==(const Cell& other) const noexcept {
    if (tag_ != other.tag_) return false;
    switch (tag_) {
        case Tag::Missing: return true;
        case Tag::Number: return number_ == other.number_;
        case Tag::Category: return category_ == other.category_;
    }
    return false;
}

std::optional<std::int32_t> ColumnSchema::category_index(std::string_view label) const {
    for (std::size_t i = 0; i < categories.size(); ++i) {
        if (categories[i] == label) return static_cast<std::int32_t>(i);
    }
    return std::nullopt;
}

Schema::Schema(std::vector<ColumnSchema> columns) : columns_(std::move(columns)) {
    std::unordered_set<std::string> names;
    std::size_t labels = 0;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        const ColumnSchema& col = columns_[i];
        if (col.name.empty()) {
            throw ValidationError("column name must be non-empty");
        }
        if (!names.insert(col.name).second) {
            throw ValidationError("duplicate column name '" + col.name + "'");
        }
        if (col.kind == ColumnKind::Categorical) {
            std::unordered_set<std::string> seen;
            for (const std::string& cat : col.categories) {
                if (cat.empty()) {
                    throw ValidationError("column '" + col.name + "' has an empty category label");
                }
                if (!seen.insert(cat).second) {
                    throw ValidationError("column '" + col.name + "' has duplicate category '" + cat + "'");
                }
            }
        } else if (!col.categories.empty()) {
            throw ValidationError("numeric column '" + col.name + "' must not list categories");
        }
        if (col.role == ColumnRole::Label) {
            ++labels;
            label_index_ = i;
        }
    }
    if (labels != 1) {
        throw ValidationError("schema must have exactly one label column, found " +
                              std::to_string(labels));
    }
}

std::size_t Schema::label_index() const {
    if (columns_.empty()) throw ValidationError("empty schema has no label column");
    return label_index_;
}

std::vector<std::size_t> Schema::feature_indices() const {
    std::vector<std::size_t> out;
    out.reserve(columns_.size());
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].role == ColumnRole::Feature) out.push_back(i);
    }
    return out;
}

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].name == name) return i;
    }
    return std::nullopt;
}

bool Schema::same_layout(const Schema& other) const {
    if (columns_.size() != other.columns_.size()) return false;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].name != other.columns_[i].name ||
            columns_[i].kind != other.columns_[i].kind ||
            columns_[i].role != other.columns_[i].role) {
            return false;
        }
    }
    return true;
}

bool Schema::operator==(const Schema& other) const {
    if (!same_layout(other)) return false;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].categories != other.columns_[i].categories) return false;
    }
    return true;
}

Dataset::Dataset(Schema schema, std::vector<Row> rows)
    : schema_(std::move(schema)), rows_(std::move(rows)) {
    const std::size_t width = schema_.size();
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (rows_[r].size() != width) {
            throw ValidationError("row " + std::to_string(r) + " has " +
                                  std::to_string(rows_[r].size()) + " cells, schema has " +
                                  std::to_string(width));
        }
        for (std::size_t c = 0; c < width; ++c) {
            const Cell& cell = rows_[r][c];
            if (cell.is_missing()) continue;
            const ColumnSchema& col = schema_[c];
            if (col.kind == ColumnKind::Numeric) {
                if (!cell.is_number()) {
                    throw ValidationError("row " + std::to_string(r) + ", column '" + col.name +
                                          "': expected numeric cell");
                }
            } else {
                if (!cell.is_category() ||
                    static_cast<std::size_t>(cell.category()) >= col.categories.size()) {
                    throw ValidationError("row " + std::to_string(r) + ", column '" + col.name +
                                          "': category index out of range");
                }
            }
        }
    }
}

bool Dataset::operator==(const Dataset& other) const {
    return schema_ == other.schema_ && rows_ == other.rows_;
}

namespace {

// Part sizes by floor, remainders to the earliest parts.
std::array<std::size_t, 3> part_sizes(std::size_t n, const std::array<double, 3>& ratios) {
    std::array<std::size_t, 3> sizes{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        sizes[i] = static_cast<std::size_t>(std::floor(ratios[i] * static_cast<double>(n)));
        assigned += sizes[i];
    }
    std::size_t remainder = n - assigned;
    for (std::size_t i = 0; i < 3 && remainder > 0; ++i, --remainder) {
        ++sizes[i];
    }
    return sizes;
}

void validate_ratios(const std::array<double, 3>& ratios) {
    double sum = 0.0;
    for (double r : ratios) {
        if (!(r > 0.0 && r < 1.0)) {
            throw ValidationError("each split ratio must lie in (0,1)");
        }
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("split ratios must sum to 1");
    }
}

}  // namespace

SplitBundle split(const Dataset& dataset, const SplitOptions& options) {
    validate_ratios(options.ratios);
    const std::size_t n = dataset.row_count();
    if (n < 3) {
        throw ValidationError("split requires at least 3 rows");
    }

    // Buckets of row indices to shuffle and carve up: one bucket overall,
    // or one per label class when stratifying.
    std::vector<std::vector<std::size_t>> buckets;
    if (options.stratified) {
        const std::size_t label = dataset.schema().label_index();
        std::map<std::int32_t, std::vector<std::size_t>> by_class;
        for (std::size_t r = 0; r < n; ++r) {
            const Cell& cell = dataset.cell(r, label);
            const std::int32_t key = cell.is_missing() ? -1 : cell.category();
            by_class[key].push_back(r);
        }
        for (auto& [key, indices] : by_class) {
            if (indices.size() < 3) {
                throw ValidationError(
                    "stratified split needs >= 3 rows per class; use --no-stratify for class " +
                    (key >= 0 ? dataset.schema().label().categories[static_cast<std::size_t>(key)]
                              : std::string("<missing>")));
            }
            buckets.push_back(std::move(indices));
        }
    } else {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        buckets.push_back(std::move(all));
    }

    std::array<std::vector<std::size_t>, 3> parts;
    Rng rng(options.seed);
    for (std::vector<std::size_t>& bucket : buckets) {
        rng.shuffle(bucket);
        const std::array<std::size_t, 3> sizes = part_sizes(bucket.size(), options.ratios);
        std::size_t cursor = 0;
        for (std::size_t p = 0; p < 3; ++p) {
            for (std::size_t i = 0; i < sizes[p]; ++i) {
                parts[p].push_back(bucket[cursor++]);
            }
        }
    }

    SplitBundle bundle;
    bundle.seed = options.seed;
    bundle.ratios = options.ratios;
    Dataset* outputs[3] = {&bundle.generator_train, &bundle.holdout, &bundle.validation};
    for (std::size_t p = 0; p < 3; ++p) {
        std::sort(parts[p].begin(), parts[p].end());  // original row order within each part
        std::vector<Row> rows;
        rows.reserve(parts[p].size());
        for (std::size_t idx : parts[p]) rows.push_back(dataset.row(idx));
        *outputs[p] = Dataset(dataset.schema(), std::move(rows));
    }
    return bundle;
}

Dataset concat(const Dataset& a, const Dataset& b) {
    if (!a.schema().same_layout(b.schema())) {
        throw ValidationError("concat: schemas differ in names, kinds, or label role");
    }

    // Merge category lists by union and remap b's category indices.
    std::vector<ColumnSchema> merged = a.schema().columns();
    std::vector<std::vector<std::int32_t>> remap(b.schema().size());
    for (std::size_t c = 0; c < merged.size(); ++c) {
        if (merged[c].kind != ColumnKind::Categorical) continue;
        const std::vector<std::string>& extra = b.schema()[c].categories;
        remap[c].resize(extra.size());
        for (std::size_t j = 0; j < extra.size(); ++j) {
            if (std::optional<std::int32_t> existing = merged[c].category_index(extra[j])) {
                remap[c][j] = *existing;
            } else {
                merged[c].categories.push_back(extra[j]);
                remap[c][j] = static_cast<std::int32_t>(merged[c].categories.size() - 1);
            }
        }
    }

    std::vector<Row> rows;
    rows.reserve(a.row_count() + b.row_count());
    for (const Row& row : a.rows()) rows.push_back(row);
    for (const Row& row : b.rows()) {
        Row mapped = row;
        for (std::size_t c = 0; c < mapped.size(); ++c) {
            if (!remap[c].empty() && mapped[c].is_category()) {
                mapped[c] = Cell::category(remap[c][static_cast<std::size_t>(mapped[c].category())]);
            }
        }
        rows.push_back(std::move(mapped));
    }
    return Dataset(Schema(std::move(merged)), std::move(rows));
}

PositiveRate positive_rate(const Dataset& dataset, std::string_view positive_label) {
    const std::size_t label = dataset.schema().label_index();
    const ColumnSchema& col = dataset.schema()[label];
    if (col.kind != ColumnKind::Categorical) {
        throw ValidationError("positive_rate requires a categorical label column");
    }
    const std::optional<std::int32_t> positive = col.category_index(positive_label);
    if (!positive) {
        throw ValidationError("unknown positive label '" + std::string(positive_label) + "'");
    }
    if (dataset.row_count() == 0) {
        return PositiveRate{0.0, true};
    }
    std::size_t count = 0;
    for (const Row& row : dataset.rows()) {
        if (!row[label].is_missing() && row[label].category() == *positive) ++count;
    }
    return PositiveRate{static_cast<double>(count) / static_cast<double>(dataset.row_count()),
                        false};
}

Dataset impute_median_mode(const Dataset& dataset) {
    const Schema& schema = dataset.schema();
    const std::size_t label = schema.empty() ? 0 : schema.label_index();
    std::vector<Cell> fills(schema.size());

    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (c == label) continue;
        if (schema[c].kind == ColumnKind::Numeric) {
            std::vector<double> observed;
            for (const Row& row : dataset.rows()) {
                if (!row[c].is_missing()) observed.push_back(row[c].number());
            }
            if (observed.empty()) {
                fills[c] = Cell::number(0.0);
            } else {
                std::sort(observed.begin(), observed.end());
                const std::size_t m = observed.size();
                const double median = (m % 2 == 1)
                                          ? observed[m / 2]
                                          : 0.5 * (observed[m / 2 - 1] + observed[m / 2]);
                fills[c] = Cell::number(median);
            }
        } else {
            std::vector<std::size_t> counts(schema[c].categories.size(), 0);
            for (const Row& row : dataset.rows()) {
                if (!row[c].is_missing()) ++counts[static_cast<std::size_t>(row[c].category())];
            }
            std::size_t best = 0;
            for (std::size_t i = 1; i < counts.size(); ++i) {
                if (counts[i] > counts[best]) best = i;
            }
            fills[c] = counts.empty() ? Cell::missing() : Cell::category(static_cast<std::int32_t>(best));
        }
    }

    std::vector<Row> rows = dataset.rows();
    for (Row& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c != label && row[c].is_missing() && !fills[c].is_missing()) {
                row[c] = fills[c];
            }
        }
    }
    return Dataset(schema, std::move(rows));
}

std::vector<std::size_t> rows_with_label(const Dataset& dataset, std::int32_t category) {
    const std::size_t label = dataset.schema().label_index();
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < dataset.row_count(); ++r) {
        const Cell& cell = dataset.cell(r, label);
        if (!cell.is_missing() && cell.category() == category) out.push_back(r);
    }
    return out;
}

}  // namespace prro
