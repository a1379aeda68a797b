#include "prro/encoding.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "prro/csv.hpp"
#include "prro/digest.hpp"

namespace prro {

namespace {

constexpr char kEscape = '\\';

// Escapes the separator alphabet plus newlines, and any leading/trailing
// run of spaces (the parser trims unescaped edge spaces so that sloppy
// external text like "age: 25 , sex: M" still parses).
std::string escape_token(const std::string& raw) {
    std::size_t lead = 0;
    while (lead < raw.size() && raw[lead] == ' ') ++lead;
    std::size_t trail = raw.size();
    while (trail > lead && raw[trail - 1] == ' ') --trail;

    std::string out;
    out.reserve(raw.size() + 4);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const char c = raw[i];
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        if (c == '\r') {
            out += "\\r";
            continue;
        }
        if (c == kEscape || c == ',' || c == ':' || (c == ' ' && (i < lead || i >= trail))) {
            out.push_back(kEscape);
        }
        out.push_back(c);
    }
    return out;
}

// Splits raw escaped text at unescaped occurrences of `delim`. When
// first_only, stops after one split.
std::vector<std::string> split_unescaped(const std::string& text, char delim, bool first_only) {
    std::vector<std::string> parts;
    std::string current;
    bool done_splitting = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == kEscape && i + 1 < text.size()) {
            current.push_back(c);
            current.push_back(text[++i]);
            continue;
        }
        if (c == delim && !done_splitting) {
            parts.push_back(std::move(current));
            current.clear();
            if (first_only) done_splitting = true;
            continue;
        }
        current.push_back(c);
    }
    parts.push_back(std::move(current));
    return parts;
}

// Trims unescaped edge spaces, then resolves escapes. A character is
// escaped iff an odd-length backslash run immediately precedes it.
std::string unescape_token(const std::string& escaped) {
    auto is_escaped_at = [&](std::size_t pos) {
        std::size_t run = 0;
        while (pos > run && escaped[pos - run - 1] == kEscape) ++run;
        return run % 2 == 1;
    };
    std::size_t begin = 0;
    while (begin < escaped.size() && escaped[begin] == ' ') ++begin;
    std::size_t end = escaped.size();
    while (end > begin && escaped[end - 1] == ' ' && !is_escaped_at(end - 1)) {
        --end;
    }
    std::string out;
    out.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
        if (escaped[i] == kEscape && i + 1 < end) {
            const char next = escaped[++i];
            if (next == 'n') out.push_back('\n');
            else if (next == 'r') out.push_back('\r');
            else out.push_back(next);
        } else {
            out.push_back(escaped[i]);
        }
    }
    return out;
}

std::string column_display_name(const Schema& schema, std::size_t index,
                                const EncodeOptions& options) {
    if (options.placeholder_names) {
        return "Column " + std::to_string(index + 1);
    }
    return schema[index].name;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), curr(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        curr[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            curr[j] = std::min({prev[j] + 1, curr[j - 1] + 1, sub});
        }
        std::swap(prev, curr);
    }
    return prev[b.size()];
}

std::int32_t nearest_category(const ColumnSchema& col, const std::string& value) {
    std::size_t best = 0;
    std::size_t best_dist = edit_distance(value, col.categories[0]);
    for (std::size_t i = 1; i < col.categories.size(); ++i) {
        const std::size_t d = edit_distance(value, col.categories[i]);
        if (d < best_dist) {
            best = i;
            best_dist = d;
        }
    }
    return static_cast<std::int32_t>(best);
}

}  // namespace

std::string schema_hash(const Schema& schema) {
    Digest digest;
    for (const ColumnSchema& col : schema.columns()) {
        digest.update(col.name).update("\x1e");
        digest.update(col.kind == ColumnKind::Numeric ? "n" : "c");
        digest.update(col.role == ColumnRole::Label ? "L" : "F");
        for (const std::string& cat : col.categories) {
            digest.update("\x1f").update(cat);
        }
        digest.update("\x1d");
    }
    return digest.hex();
}

EncodedRow encode_row(const Row& row, const Schema& schema, const EncodeOptions& options) {
    if (row.size() != schema.size()) {
        throw ValidationError("encode_row: row width does not match schema");
    }
    std::string text;
    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (c) text += ", ";
        text += escape_token(column_display_name(schema, c, options));
        text += ": ";
        const Cell& cell = row[c];
        if (cell.is_missing()) continue;
        if (schema[c].kind == ColumnKind::Numeric) {
            text += format_number(cell.number());
        } else {
            text += escape_token(schema[c].categories[static_cast<std::size_t>(cell.category())]);
        }
    }
    return EncodedRow{std::move(text), schema_hash(schema)};
}

std::vector<EncodedRow> encode_dataset(const Dataset& dataset, const EncodeOptions& options) {
    std::vector<EncodedRow> out;
    out.reserve(dataset.row_count());
    for (const Row& row : dataset.rows()) {
        out.push_back(encode_row(row, dataset.schema(), options));
    }
    return out;
}

ParseOutcome parse_sentence(const std::string& text, const Schema& schema,
                            const ParsePolicy& policy, const EncodeOptions& options) {
    ParseOutcome outcome;
    outcome.reject.text = text;

    auto reject = [&](std::string reason, std::string column) {
        outcome.reject.reason = std::move(reason);
        outcome.reject.column = std::move(column);
        return outcome;
    };
    auto drop = [&] {
        outcome.dropped = true;
        return outcome;
    };

    Row row(schema.size());
    std::vector<bool> seen(schema.size(), false);

    for (const std::string& segment : split_unescaped(text, ',', /*first_only=*/false)) {
        const std::vector<std::string> halves = split_unescaped(segment, ':', /*first_only=*/true);
        if (halves.size() < 2) {
            if (unescape_token(segment).empty()) continue;  // tolerate stray separators
            return reject("segment has no name/value delimiter", "");
        }
        const std::string name = unescape_token(halves[0]);
        const std::string value = unescape_token(halves[1]);

        std::optional<std::size_t> col_index;
        if (options.placeholder_names) {
            for (std::size_t c = 0; c < schema.size(); ++c) {
                if (name == column_display_name(schema, c, options)) {
                    col_index = c;
                    break;
                }
            }
        } else {
            col_index = schema.index_of(name);
        }

        // Unknown or duplicate segment names fall under the
        // unknown-category policy: reject, ignore, or drop the row.
        if (!col_index || seen[*col_index]) {
            switch (policy.on_unknown_category) {
                case ParsePolicy::OnUnknownCategory::Reject:
                    return reject(col_index ? "duplicate segment" : "unknown segment name", name);
                case ParsePolicy::OnUnknownCategory::CoerceToNearest:
                    continue;
                case ParsePolicy::OnUnknownCategory::DropRow:
                    return drop();
            }
        }
        const std::size_t c = *col_index;
        seen[c] = true;

        if (value.empty()) {
            row[c] = Cell::missing();
            continue;
        }
        if (schema[c].kind == ColumnKind::Numeric) {
            if (const std::optional<double> num = parse_number(value)) {
                row[c] = Cell::number(*num);
            } else {
                switch (policy.on_numeric_parse_fail) {
                    case ParsePolicy::OnNumericParseFail::Reject:
                        return reject("cannot parse numeric value \"" + value + "\"",
                                      schema[c].name);
                    case ParsePolicy::OnNumericParseFail::DropRow:
                        return drop();
                }
            }
        } else {
            if (const std::optional<std::int32_t> idx = schema[c].category_index(value)) {
                row[c] = Cell::category(*idx);
            } else {
                switch (policy.on_unknown_category) {
                    case ParsePolicy::OnUnknownCategory::Reject:
                        return reject("unknown category \"" + value + "\"", schema[c].name);
                    case ParsePolicy::OnUnknownCategory::CoerceToNearest:
                        if (schema[c].categories.empty()) {
                            return reject("column has no categories to coerce into",
                                          schema[c].name);
                        }
                        row[c] = Cell::category(nearest_category(schema[c], value));
                        break;
                    case ParsePolicy::OnUnknownCategory::DropRow:
                        return drop();
                }
            }
        }
    }

    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (!seen[c]) {
            switch (policy.on_missing_column) {
                case ParsePolicy::OnMissingColumn::Reject:
                    return reject("no segment for column", schema[c].name);
                case ParsePolicy::OnMissingColumn::DropRow:
                    return drop();
            }
        }
    }

    outcome.accepted = true;
    outcome.row = std::move(row);
    return outcome;
}

CorpusParseResult parse_corpus(const std::vector<std::string>& texts, const Schema& schema,
                               const ParsePolicy& policy, const EncodeOptions& options) {
    if (policy.max_reject_fraction < 0.0 || policy.max_reject_fraction > 1.0) {
        throw ValidationError("max_reject_fraction must lie in [0,1]");
    }

    std::size_t first_line = 0;
    if (!texts.empty() && texts[0].rfind("#schema:", 0) == 0) {
        first_line = 1;
    }
    const std::size_t total = texts.size() - first_line;
    const double allowed = policy.max_reject_fraction * static_cast<double>(total);

    CorpusParseResult result;
    std::vector<Row> rows;
    for (std::size_t i = first_line; i < texts.size(); ++i) {
        ParseOutcome outcome = parse_sentence(texts[i], schema, policy, options);
        if (outcome.accepted) {
            rows.push_back(std::move(outcome.row));
        } else if (outcome.dropped) {
            ++result.dropped;
        } else {
            outcome.reject.line_no = i + 1;
            result.rejects.push_back(std::move(outcome.reject));
            if (static_cast<double>(result.rejects.size()) > allowed) {
                throw ValidationError(
                    "corpus reject fraction exceeds " +
                    format_number(policy.max_reject_fraction) + " (" +
                    std::to_string(result.rejects.size()) + " of " + std::to_string(total) +
                    " rejected); first reject at line " +
                    std::to_string(result.rejects.front().line_no) + ": " +
                    result.rejects.front().reason);
            }
        }
    }
    result.dataset = Dataset(schema, std::move(rows));
    return result;
}

void save_corpus(const std::vector<EncodedRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    if (!rows.empty()) {
        out << "#schema:" << rows.front().source_schema_hash << '\n';
    }
    for (const EncodedRow& row : rows) {
        out << row.text << '\n';
    }
    if (!out) {
        throw IoError("write failed for '" + path.string() + "'");
    }
}

std::vector<std::string> load_corpus_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open corpus '" + path.string() + "'");
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

void save_rejects(const std::vector<RejectRecord>& rejects, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    for (const RejectRecord& reject : rejects) {
        nlohmann::json record{{"line_no", reject.line_no},
                              {"text", reject.text},
                              {"reason", reject.reason},
                              {"column", reject.column}};
        out << record.dump() << '\n';
    }
}

}  // namespace prro
