#include "prro/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unordered_map>

namespace prro {

std::string format_number(double value) {
    char buf[32];
    const std::to_chars_result res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::optional<double> parse_number(std::string_view text) {
    std::size_t begin = 0, end = text.size();
    while (begin < end && (text[begin] == ' ' || text[begin] == '\t')) ++begin;
    while (end > begin && (text[end - 1] == ' ' || text[end - 1] == '\t')) --end;
    if (begin == end) return std::nullopt;
    double value = 0.0;
    const char* first = text.data() + begin;
    const char* last = text.data() + end;
    const std::from_chars_result res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last || !std::isfinite(value)) return std::nullopt;
    return value;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// RFC-4180 state machine; tolerates CRLF and a missing final newline.
std::vector<std::vector<std::string>> parse_csv_records(const std::string& text,
                                                        const std::string& origin) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool field_started = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field_started && field.empty()) {
                    quoted = true;
                    field_started = true;
                } else {
                    field.push_back(c);
                }
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
                end_record();
                break;
            case '\n':
                end_record();
                break;
            default:
                field.push_back(c);
                field_started = true;
        }
    }
    if (quoted) {
        throw ValidationError(origin + ": unterminated quoted field");
    }
    if (field_started || !field.empty() || !record.empty()) {
        end_record();
    }
    return records;
}

std::string quote_csv_field(const std::string& value) {
    const bool needs_quotes = value.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

Cell make_cell(const std::string& field, const ColumnSchema& col, std::size_t data_row,
               std::vector<std::string>* grow_categories) {
    if (field.empty()) return Cell::missing();
    if (col.kind == ColumnKind::Numeric) {
        const std::optional<double> value = parse_number(field);
        if (!value) {
            throw ValidationError("row " + std::to_string(data_row) + ", column '" + col.name +
                                  "': cannot parse numeric value \"" + field + "\"");
        }
        return Cell::number(*value);
    }
    if (std::optional<std::int32_t> idx = col.category_index(field)) {
        return Cell::category(*idx);
    }
    if (grow_categories) {
        grow_categories->push_back(field);
        return Cell::category(static_cast<std::int32_t>(grow_categories->size() - 1));
    }
    throw ValidationError("row " + std::to_string(data_row) + ", column '" + col.name +
                          "': unknown category \"" + field + "\"");
}

Dataset build_dataset(const std::vector<std::vector<std::string>>& records,
                      std::vector<ColumnSchema> columns, const std::string& origin,
                      const std::vector<bool>& grow_categories) {
    const std::size_t width = columns.size();
    const std::size_t label = [&] {
        for (std::size_t c = 0; c < width; ++c) {
            if (columns[c].role == ColumnRole::Label) return c;
        }
        return width;
    }();

    std::vector<Row> rows;
    rows.reserve(records.size() > 0 ? records.size() - 1 : 0);
    for (std::size_t r = 1; r < records.size(); ++r) {
        const std::vector<std::string>& record = records[r];
        if (record.size() != width) {
            throw ValidationError(origin + ": row " + std::to_string(r) + " has " +
                                  std::to_string(record.size()) + " fields, header has " +
                                  std::to_string(width));
        }
        Row row(width);
        for (std::size_t c = 0; c < width; ++c) {
            std::vector<std::string>* grow =
                (grow_categories[c] && columns[c].kind == ColumnKind::Categorical)
                    ? &columns[c].categories
                    : nullptr;
            row[c] = make_cell(record[c], columns[c], r, grow);
        }
        if (label < width && row[label].is_missing()) {
            throw ValidationError(origin + ": row " + std::to_string(r) + " has a missing label");
        }
        rows.push_back(std::move(row));
    }
    return Dataset(Schema(std::move(columns)), std::move(rows));
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
    const std::string text = read_file(path);
    const std::vector<std::vector<std::string>> records = parse_csv_records(text, path.string());
    if (records.empty()) {
        throw ValidationError(path.string() + ": missing header row");
    }
    const std::vector<std::string>& header = records[0];
    if (header.size() != schema.size()) {
        throw ValidationError(path.string() + ": header has " + std::to_string(header.size()) +
                              " columns, schema has " + std::to_string(schema.size()));
    }

    // Sidecar columns are matched by name; the file's column order wins.
    // A categorical column with no pinned categories grows its list from
    // the data; a pinned list rejects unknown values.
    std::vector<ColumnSchema> columns;
    columns.reserve(header.size());
    std::vector<bool> grow(header.size(), false);
    for (std::size_t c = 0; c < header.size(); ++c) {
        const ColumnSchema* found = nullptr;
        for (const ColumnSchema& col : schema.columns()) {
            if (col.name == header[c]) {
                found = &col;
                break;
            }
        }
        if (!found) {
            throw ValidationError(path.string() + ": header column '" + header[c] +
                                  "' not present in schema");
        }
        grow[c] = found->kind == ColumnKind::Categorical && found->categories.empty();
        columns.push_back(*found);
    }
    return build_dataset(records, std::move(columns), path.string(), grow);
}

Dataset load_csv_infer(const std::filesystem::path& path, std::optional<std::string> label_column) {
    const std::string text = read_file(path);
    const std::vector<std::vector<std::string>> records = parse_csv_records(text, path.string());
    if (records.empty()) {
        throw ValidationError(path.string() + ": missing header row");
    }
    const std::vector<std::string>& header = records[0];
    if (header.empty()) {
        throw ValidationError(path.string() + ": empty header row");
    }

    std::vector<ColumnSchema> columns(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        columns[c].name = header[c];
        bool numeric = true;
        bool any_value = false;
        for (std::size_t r = 1; r < records.size() && numeric; ++r) {
            if (records[r].size() != header.size()) {
                throw ValidationError(path.string() + ": row " + std::to_string(r) + " has " +
                                      std::to_string(records[r].size()) +
                                      " fields, header has " + std::to_string(header.size()));
            }
            const std::string& field = records[r][c];
            if (field.empty()) continue;
            any_value = true;
            if (!parse_number(field)) numeric = false;
        }
        columns[c].kind = (numeric && any_value) ? ColumnKind::Numeric : ColumnKind::Categorical;
    }

    std::size_t label = header.size() - 1;
    if (label_column) {
        bool found = false;
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (header[c] == *label_column) {
                label = c;
                found = true;
                break;
            }
        }
        if (!found) {
            throw ValidationError(path.string() + ": label column '" + *label_column +
                                  "' not in header");
        }
    }
    columns[label].role = ColumnRole::Label;
    if (columns[label].kind == ColumnKind::Numeric) {
        columns[label].kind = ColumnKind::Categorical;  // labels are treated as classes
    }
    std::vector<bool> grow(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
        grow[c] = columns[c].kind == ColumnKind::Categorical;
    }
    return build_dataset(records, std::move(columns), path.string(), grow);
}

Dataset load_csv_auto(const std::filesystem::path& csv_path,
                      const std::optional<std::filesystem::path>& sidecar_path,
                      std::optional<std::string> label_column) {
    if (sidecar_path) {
        return load_csv(csv_path, load_schema_sidecar(*sidecar_path).schema);
    }
    std::filesystem::path guess = csv_path;
    guess.replace_extension(".schema");
    std::error_code ec;
    if (std::filesystem::exists(guess, ec)) {
        return load_csv(csv_path, load_schema_sidecar(guess).schema);
    }
    return load_csv_infer(csv_path, std::move(label_column));
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    const Schema& schema = dataset.schema();
    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (c) out << ',';
        out << quote_csv_field(schema[c].name);
    }
    out << '\n';
    for (const Row& row : dataset.rows()) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            const Cell& cell = row[c];
            if (cell.is_missing()) continue;
            if (schema[c].kind == ColumnKind::Numeric) {
                out << format_number(cell.number());
            } else {
                out << quote_csv_field(schema[c].categories[static_cast<std::size_t>(cell.category())]);
            }
        }
        out << '\n';
    }
    if (!out) {
        throw IoError("write failed for '" + path.string() + "'");
    }
}

std::string escape_list_item(const std::string& value) {
    std::string out;
    for (char c : value) {
        if (c == '\\' || c == '|') out.push_back('\\');
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        if (c == '\r') {
            out += "\\r";
            continue;
        }
        out.push_back(c);
    }
    return out;
}

std::vector<std::string> split_escaped_list(const std::string& text) {
    std::vector<std::string> items;
    std::string current;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '\\' && i + 1 < text.size()) {
            const char next = text[++i];
            if (next == 'n') current.push_back('\n');
            else if (next == 'r') current.push_back('\r');
            else current.push_back(next);
        } else if (c == '|') {
            items.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    items.push_back(std::move(current));
    return items;
}

namespace {

// Single-value sidecar fields (names, labels): only line-breaking
// characters and the backslash need escaping.
std::string escape_line_value(const std::string& value) {
    std::string out;
    for (char c : value) {
        if (c == '\\') out += "\\\\";
        else if (c == '\n') out += "\\n";
        else if (c == '\r') out += "\\r";
        else out.push_back(c);
    }
    return out;
}

std::string unescape_line_value(const std::string& value) {
    std::string out;
    for (std::size_t i = 0; i < value.size(); ++i) {
        if (value[i] == '\\' && i + 1 < value.size()) {
            const char next = value[++i];
            if (next == 'n') out.push_back('\n');
            else if (next == 'r') out.push_back('\r');
            else out.push_back(next);
        } else {
            out.push_back(value[i]);
        }
    }
    return out;
}

}  // namespace

SchemaSidecar load_schema_sidecar(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    std::unordered_map<std::string, std::string> kv;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(path.string() + ": expected key=value, got \"" + line + "\"");
        }
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }

    std::vector<ColumnSchema> columns;
    for (std::size_t i = 0;; ++i) {
        const std::string prefix = "column." + std::to_string(i) + ".";
        const auto name_it = kv.find(prefix + "name");
        if (name_it == kv.end()) break;
        ColumnSchema col;
        col.name = unescape_line_value(name_it->second);
        const auto kind_it = kv.find(prefix + "kind");
        if (kind_it == kv.end()) {
            throw ValidationError(path.string() + ": missing " + prefix + "kind");
        }
        if (kind_it->second == "numeric") {
            col.kind = ColumnKind::Numeric;
        } else if (kind_it->second == "categorical") {
            col.kind = ColumnKind::Categorical;
        } else {
            throw ValidationError(path.string() + ": bad kind \"" + kind_it->second + "\"");
        }
        if (const auto cats_it = kv.find(prefix + "categories"); cats_it != kv.end()) {
            if (!cats_it->second.empty()) col.categories = split_escaped_list(cats_it->second);
        }
        columns.push_back(std::move(col));
    }
    if (columns.empty()) {
        throw ValidationError(path.string() + ": sidecar lists no columns");
    }

    const auto label_it = kv.find("label");
    if (label_it == kv.end()) {
        throw ValidationError(path.string() + ": sidecar must name the label column");
    }
    const std::string label_name = unescape_line_value(label_it->second);
    bool found = false;
    for (ColumnSchema& col : columns) {
        if (col.name == label_name) {
            col.role = ColumnRole::Label;
            if (col.kind == ColumnKind::Numeric) col.kind = ColumnKind::Categorical;
            found = true;
        }
    }
    if (!found) {
        throw ValidationError(path.string() + ": label column '" + label_name +
                              "' not among the listed columns");
    }

    SchemaSidecar sidecar;
    sidecar.schema = Schema(std::move(columns));
    if (const auto pos_it = kv.find("positive_label"); pos_it != kv.end()) {
        sidecar.positive_label = unescape_line_value(pos_it->second);
    }
    return sidecar;
}

void save_schema_sidecar(const Schema& schema, const std::filesystem::path& path,
                         const std::optional<std::string>& positive_label) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    out << "# prro schema sidecar\n";
    out << "label=" << escape_line_value(schema.label().name) << '\n';
    if (positive_label) {
        out << "positive_label=" << escape_line_value(*positive_label) << '\n';
    }
    for (std::size_t c = 0; c < schema.size(); ++c) {
        const ColumnSchema& col = schema[c];
        const std::string prefix = "column." + std::to_string(c) + ".";
        out << prefix << "name=" << escape_line_value(col.name) << '\n';
        out << prefix << "kind=" << (col.kind == ColumnKind::Numeric ? "numeric" : "categorical")
            << '\n';
        if (col.kind == ColumnKind::Categorical && !col.categories.empty()) {
            out << prefix << "categories=";
            for (std::size_t i = 0; i < col.categories.size(); ++i) {
                if (i) out << '|';
                out << escape_list_item(col.categories[i]);
            }
            out << '\n';
        }
    }
    if (!out) {
        throw IoError("write failed for '" + path.string() + "'");
    }
}

}  // namespace prro
