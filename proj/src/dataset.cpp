#include "ppcheck/dataset.hpp"

#include "ppcheck/util.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>
#include <unordered_map>

namespace ppc {

using json = nlohmann::ordered_json;
using ordered_json = nlohmann::ordered_json;

std::string_view column_type_name(ColumnType t) {
    switch (t) {
        case ColumnType::Real: return "real";
        case ColumnType::Integer: return "integer";
        case ColumnType::Categorical: return "categorical";
        case ColumnType::Boolean: return "boolean";
    }
    return "?";
}

Eigen::Index Column::size() const {
    switch (type) {
        case ColumnType::Real:
        case ColumnType::Integer: return values.size();
        case ColumnType::Categorical: return static_cast<Eigen::Index>(codes.size());
        case ColumnType::Boolean: return static_cast<Eigen::Index>(flags.size());
    }
    return 0;
}

std::optional<std::int32_t> Column::code_of(std::string_view label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) return static_cast<std::int32_t>(i);
    return std::nullopt;
}

bool Column::operator==(const Column& o) const {
    if (name != o.name || type != o.type) return false;
    switch (type) {
        case ColumnType::Real:
        case ColumnType::Integer:
            return values.size() == o.values.size() && values == o.values;
        case ColumnType::Categorical: return codes == o.codes && labels == o.labels;
        case ColumnType::Boolean: return flags == o.flags;
    }
    return false;
}

Column Column::real(std::string name, Eigen::VectorXd values) {
    Column c;
    c.name = std::move(name);
    c.type = ColumnType::Real;
    c.values = std::move(values);
    return c;
}

Column Column::integer(std::string name, Eigen::VectorXd values) {
    Column c = real(std::move(name), std::move(values));
    c.type = ColumnType::Integer;
    return c;
}

Column Column::categorical(std::string name, const std::vector<std::string>& values) {
    Column c;
    c.name = std::move(name);
    c.type = ColumnType::Categorical;
    c.codes.reserve(values.size());
    std::unordered_map<std::string, std::int32_t> seen;
    for (const auto& v : values) {
        auto it = seen.find(v);
        if (it == seen.end()) {
            it = seen.emplace(v, static_cast<std::int32_t>(c.labels.size())).first;
            c.labels.push_back(v);
        }
        c.codes.push_back(it->second);
    }
    return c;
}

Column Column::boolean(std::string name, std::vector<std::uint8_t> flags) {
    Column c;
    c.name = std::move(name);
    c.type = ColumnType::Boolean;
    c.flags = std::move(flags);
    return c;
}

Dataset::Dataset(std::string name, std::vector<Column> columns, std::string target)
    : name_(std::move(name)), columns_(std::move(columns)), target_(std::move(target)) {
    if (columns_.empty()) raise(Errc::EmptyDataset, "dataset '" + name_ + "' has no columns");
    std::set<std::string> seen;
    n_rows_ = columns_.front().size();
    for (const auto& c : columns_) {
        if (c.name.empty()) raise(Errc::EmptyColumnName, "dataset '" + name_ + "'");
        if (!seen.insert(c.name).second)
            raise(Errc::DuplicateColumn, "column '" + c.name + "'");
        if (c.size() != n_rows_)
            raise(Errc::RaggedRow, "column '" + c.name + "' has " + std::to_string(c.size()) +
                                       " rows, expected " + std::to_string(n_rows_));
        if (c.is_numeric())
            for (Eigen::Index i = 0; i < c.values.size(); ++i)
                if (!std::isfinite(c.values[i]))
                    raise(Errc::NonFiniteValue,
                          "column '" + c.name + "' row " + std::to_string(i + 1));
    }
    if (n_rows_ == 0) raise(Errc::EmptyDataset, "dataset '" + name_ + "' has no rows");
    const Column* t = find(target_);
    if (t == nullptr) raise(Errc::MissingTargetColumn, "target '" + target_ + "'");
    if (!t->is_numeric())
        raise(Errc::TargetNotNumeric, "target '" + target_ + "' is " +
                                          std::string(column_type_name(t->type)));
}

const Column* Dataset::find(std::string_view name) const {
    for (const auto& c : columns_)
        if (c.name == name) return &c;
    return nullptr;
}

const Column& Dataset::column(std::string_view name) const {
    const Column* c = find(name);
    if (c == nullptr) raise(Errc::UnknownColumn, "column '" + std::string(name) + "'");
    return *c;
}

const Eigen::VectorXd& Dataset::target_values() const { return column(target_).values; }

Dataset Dataset::with_target_values(Eigen::VectorXd y) const {
    if (y.size() != n_rows_)
        raise(Errc::AlignmentError, "replacement target has " + std::to_string(y.size()) +
                                        " rows, dataset has " + std::to_string(n_rows_));
    std::vector<Column> cols = columns_;
    for (auto& c : cols)
        if (c.name == target_) {
            c.values = std::move(y);
            c.type = ColumnType::Real;
            break;
        }
    return Dataset(name_, std::move(cols), target_);
}

bool Dataset::operator==(const Dataset& o) const {
    return name_ == o.name_ && target_ == o.target_ && columns_ == o.columns_;
}

// --- CSV ------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    std::size_t i = 0;
    const std::size_t n = line.size();
    out.reserve(8);
    while (i <= n) {
        if (i == n) {
            out.push_back(cell);
            break;
        }
        char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < n && line[i + 1] == '"') {
                    cell += '"';
                    i += 2;
                    continue;
                }
                quoted = false;
                ++i;
                continue;
            }
            cell += ch;
            ++i;
            continue;
        }
        if (ch == '"' && cell.empty()) {
            quoted = true;
            ++i;
            continue;
        }
        if (ch == ',') {
            out.push_back(cell);
            cell.clear();
            ++i;
            continue;
        }
        cell += ch;
        ++i;
    }
    if (quoted)
        raise(Errc::MalformedFile, "unterminated quote on line " + std::to_string(line_no));
    return out;
}

bool parse_full_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && errno != ERANGE;
}

bool parse_full_integer(const std::string& s, double& out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size() || errno == ERANGE) return false;
    out = static_cast<double>(v);
    return static_cast<long long>(out) == v; // representable exactly
}

bool parse_bool_token(const std::string& s, bool& out) {
    if (s == "true" || s == "True" || s == "TRUE") {
        out = true;
        return true;
    }
    if (s == "false" || s == "False" || s == "FALSE") {
        out = false;
        return true;
    }
    return false;
}

std::string csv_escape(const std::string& s) {
    bool needs = s.find_first_of(",\"\n\r") != std::string::npos || (!s.empty() && (s.front() == ' ' || s.back() == ' '));
    if (!needs) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

Column infer_column(const std::string& name, const std::vector<std::string>& cells) {
    bool all_int = true, all_real = true, all_bool = true;
    for (const auto& s : cells) {
        double d;
        bool b;
        if (all_int && !parse_full_integer(s, d)) all_int = false;
        if (all_real && !parse_full_double(s, d)) all_real = false;
        if (all_bool && !parse_bool_token(s, b)) all_bool = false;
        if (!all_int && !all_real && !all_bool) break;
    }
    const auto n = static_cast<Eigen::Index>(cells.size());
    if (all_int || all_real) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double d = 0;
            if (all_int)
                parse_full_integer(cells[static_cast<std::size_t>(i)], d);
            else
                parse_full_double(cells[static_cast<std::size_t>(i)], d);
            if (!std::isfinite(d))
                raise(Errc::NonFiniteValue, "column '" + name + "' row " + std::to_string(i + 1));
            v[i] = d;
        }
        return all_int ? Column::integer(name, std::move(v)) : Column::real(name, std::move(v));
    }
    if (all_bool) {
        std::vector<std::uint8_t> flags(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            bool b = false;
            parse_bool_token(cells[i], b);
            flags[i] = b ? 1 : 0;
        }
        return Column::boolean(name, std::move(flags));
    }
    return Column::categorical(name, cells);
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) {
        if (cur.back() == '\r') cur.pop_back();
        lines.push_back(cur);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

} // namespace

Dataset dataset_from_csv(std::string_view text, std::string name, const std::string& target) {
    auto lines = split_lines(text);
    if (lines.empty()) raise(Errc::EmptyDataset, "'" + name + "' is empty");
    auto header = split_csv_line(lines[0], 1);
    const std::size_t width = header.size();
    std::vector<std::vector<std::string>> by_column(width);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        auto cells = split_csv_line(lines[r], r + 1);
        if (cells.size() != width)
            raise(Errc::RaggedRow, "row " + std::to_string(r) + " has " +
                                       std::to_string(cells.size()) + " cells, expected " +
                                       std::to_string(width));
        for (std::size_t c = 0; c < width; ++c) {
            if (cells[c].empty())
                raise(Errc::MissingValue,
                      "row " + std::to_string(r) + ", column '" + header[c] + "'");
            by_column[c].push_back(std::move(cells[c]));
        }
    }
    std::vector<Column> cols;
    cols.reserve(width);
    for (std::size_t c = 0; c < width; ++c) cols.push_back(infer_column(header[c], by_column[c]));
    return Dataset(std::move(name), std::move(cols), target);
}

Dataset dataset_from_json(const json& doc, std::string fallback_name, const std::string& target) {
    if (!doc.is_object() || !doc.contains("columns") || !doc["columns"].is_array())
        raise(Errc::MalformedFile, "dataset json needs a 'columns' array");
    std::string name = doc.value("name", fallback_name);
    std::string tgt = target.empty() ? doc.value("target", "") : target;
    std::vector<Column> cols;
    for (const auto& jc : doc["columns"]) {
        std::string cname = jc.value("name", "");
        std::string type = jc.value("type", "real");
        const auto& vals = jc.at("values");
        if (type == "categorical") {
            std::vector<std::string> cells;
            for (const auto& v : vals) cells.push_back(v.get<std::string>());
            cols.push_back(Column::categorical(cname, cells));
        } else if (type == "boolean") {
            std::vector<std::uint8_t> flags;
            for (const auto& v : vals) flags.push_back(v.get<bool>() ? 1 : 0);
            cols.push_back(Column::boolean(cname, std::move(flags)));
        } else {
            Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
            Eigen::Index i = 0;
            for (const auto& x : vals) v[i++] = x.get<double>();
            cols.push_back(type == "integer" ? Column::integer(cname, std::move(v))
                                             : Column::real(cname, std::move(v)));
        }
    }
    return Dataset(std::move(name), std::move(cols), tgt);
}

Dataset load_dataset(const std::filesystem::path& path, const std::string& target) {
    std::string text = read_text_file(path);
    if (path.extension() == ".json") {
        json doc = json::parse(text, nullptr, false);
        if (doc.is_discarded()) raise(Errc::MalformedFile, "invalid json in '" + path.string() + "'");
        return dataset_from_json(doc, path.stem().string(), target);
    }
    return dataset_from_csv(text, path.stem().string(), target);
}

std::string dataset_to_csv(const Dataset& d) {
    std::ostringstream out;
    const auto& cols = d.columns();
    for (std::size_t c = 0; c < cols.size(); ++c) {
        if (c) out << ',';
        out << csv_escape(cols[c].name);
    }
    out << '\n';
    for (Eigen::Index r = 0; r < d.n_rows(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c) out << ',';
            const Column& col = cols[c];
            switch (col.type) {
                case ColumnType::Real:
                case ColumnType::Integer: out << format_double(col.values[r]); break;
                case ColumnType::Categorical: out << csv_escape(col.label_at(r)); break;
                case ColumnType::Boolean: out << (col.flags[static_cast<std::size_t>(r)] ? "true" : "false"); break;
            }
        }
        out << '\n';
    }
    return out.str();
}

nlohmann::ordered_json dataset_to_json(const Dataset& d) {
    ordered_json doc;
    doc["name"] = d.name();
    doc["target"] = d.target();
    doc["columns"] = json::array();
    for (const auto& c : d.columns()) {
        ordered_json jc;
        jc["name"] = c.name;
        jc["type"] = std::string(column_type_name(c.type));
        json vals = json::array();
        for (Eigen::Index r = 0; r < c.size(); ++r) {
            switch (c.type) {
                case ColumnType::Real: vals.push_back(c.values[r]); break;
                case ColumnType::Integer: vals.push_back(static_cast<long long>(c.values[r])); break;
                case ColumnType::Categorical: vals.push_back(c.label_at(r)); break;
                case ColumnType::Boolean: vals.push_back(c.flags[static_cast<std::size_t>(r)] != 0); break;
            }
        }
        jc["values"] = std::move(vals);
        doc["columns"].push_back(std::move(jc));
    }
    return doc;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
    if (path.extension() == ".json")
        write_text_file_atomic(path, dataset_to_json(d).dump(2) + "\n");
    else
        write_text_file_atomic(path, dataset_to_csv(d));
}

// --- model samples ----------------------------------------------------------

namespace {

void check_replicates(ModelSampleSet& s) {
    if (s.replicates.empty()) raise(Errc::EmptySampleSet, "no replicates");
    const Eigen::Index len = s.replicates.front().size();
    for (std::size_t i = 0; i < s.replicates.size(); ++i) {
        const auto& r = s.replicates[i];
        if (r.size() != len)
            raise(Errc::ReplicateLengthMismatch,
                  "replicate " + std::to_string(i) + " has length " + std::to_string(r.size()) +
                      ", expected " + std::to_string(len));
        for (Eigen::Index j = 0; j < r.size(); ++j)
            if (!std::isfinite(r[j]))
                raise(Errc::NonFiniteSample, "replicate " + std::to_string(i) + ", position " +
                                                 std::to_string(j));
    }
}

} // namespace

ModelSampleSet samples_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("replicates") || !doc["replicates"].is_array())
        raise(Errc::MalformedFile, "sample json needs a 'replicates' array");
    ModelSampleSet s;
    s.model_id = doc.value("model_id", "");
    for (const auto& jr : doc["replicates"]) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(jr.size()));
        Eigen::Index i = 0;
        for (const auto& x : jr) {
            if (x.is_string()) {
                // "inf"/"nan" in a sample file is still a non-finite sample
                raise(Errc::NonFiniteSample, "replicate " + std::to_string(s.replicates.size()) +
                                                 ", position " + std::to_string(i));
            }
            v[i++] = x.get<double>();
        }
        s.replicates.push_back(std::move(v));
    }
    check_replicates(s);
    return s;
}

ModelSampleSet samples_from_csv(std::string_view text) {
    ModelSampleSet s;
    for (const auto& line : split_lines(text)) {
        auto cells = split_csv_line(line, s.replicates.size() + 1);
        Eigen::VectorXd v(static_cast<Eigen::Index>(cells.size()));
        for (std::size_t i = 0; i < cells.size(); ++i) {
            double d;
            if (!parse_full_double(cells[i], d) || !std::isfinite(d))
                raise(Errc::NonFiniteSample, "replicate " + std::to_string(s.replicates.size()) +
                                                 ", position " + std::to_string(i));
            v[static_cast<Eigen::Index>(i)] = d;
        }
        s.replicates.push_back(std::move(v));
    }
    check_replicates(s);
    return s;
}

ModelSampleSet load_samples(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    if (path.extension() == ".json") {
        json doc = json::parse(text, nullptr, false);
        if (doc.is_discarded()) raise(Errc::MalformedFile, "invalid json in '" + path.string() + "'");
        return samples_from_json(doc);
    }
    return samples_from_csv(text);
}

nlohmann::ordered_json samples_to_json(const ModelSampleSet& s) {
    ordered_json doc;
    doc["model_id"] = s.model_id;
    json reps = json::array();
    for (const auto& r : s.replicates) {
        json row = json::array();
        for (Eigen::Index i = 0; i < r.size(); ++i) row.push_back(r[i]);
        reps.push_back(std::move(row));
    }
    doc["replicates"] = std::move(reps);
    return doc;
}

void save_samples(const ModelSampleSet& s, const std::filesystem::path& path) {
    write_text_file_atomic(path, samples_to_json(s).dump() + "\n");
}

// --- metadata ----------------------------------------------------------------

DatasetMetadata metadata_from_json(const json& doc) {
    DatasetMetadata m;
    m.description = doc.value("description", "");
    if (doc.contains("columns"))
        for (auto it = doc["columns"].begin(); it != doc["columns"].end(); ++it)
            m.column_descriptions[it.key()] = it.value().get<std::string>();
    return m;
}

DatasetMetadata load_metadata(const std::filesystem::path& path) {
    json doc = json::parse(read_text_file(path), nullptr, false);
    if (doc.is_discarded()) raise(Errc::MalformedFile, "invalid json in '" + path.string() + "'");
    return metadata_from_json(doc);
}

nlohmann::ordered_json metadata_to_json(const DatasetMetadata& m) {
    ordered_json doc;
    doc["description"] = m.description;
    ordered_json cols;
    for (const auto& [k, v] : m.column_descriptions) cols[k] = v;
    doc["columns"] = std::move(cols);
    return doc;
}

void validate_metadata(const DatasetMetadata& m, const Dataset& d) {
    for (const auto& [name, _] : m.column_descriptions)
        if (d.find(name) == nullptr)
            raise(Errc::UnknownColumnDescription, "metadata describes absent column '" + name + "'");
}

void validate_alignment(const Dataset& d, const ModelSampleSet& s) {
    if (s.m() == 0) raise(Errc::EmptySampleSet, "sample set is empty");
    for (std::size_t i = 0; i < s.replicates.size(); ++i)
        if (s.replicates[i].size() != d.n_rows())
            raise(Errc::AlignmentError, "replicate " + std::to_string(i) + " has length " +
                                            std::to_string(s.replicates[i].size()) +
                                            ", dataset has " + std::to_string(d.n_rows()) +
                                            " rows");
}

} // namespace ppc
