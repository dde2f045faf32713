#pragma once

#include "ppcheck/errors.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ppc {

enum class ColumnType { Real, Integer, Categorical, Boolean };

std::string_view column_type_name(ColumnType t);

/// One typed column. Real and Integer values live in an Eigen vector
/// (integers are integral-valued doubles; the tag is kept for round-trips).
/// Categorical values are interned codes over a label table so slicing
/// predicates compare small ints, not strings.
struct Column {
    std::string name;
    ColumnType type = ColumnType::Real;
    Eigen::VectorXd values;              // Real / Integer
    std::vector<std::int32_t> codes;     // Categorical
    std::vector<std::string> labels;     // Categorical label table, in first-seen order
    std::vector<std::uint8_t> flags;     // Boolean

    Eigen::Index size() const;
    bool is_numeric() const { return type == ColumnType::Real || type == ColumnType::Integer; }
    const std::string& label_at(Eigen::Index row) const { return labels[static_cast<std::size_t>(codes[static_cast<std::size_t>(row)])]; }
    std::optional<std::int32_t> code_of(std::string_view label) const;

    bool operator==(const Column&) const;

    static Column real(std::string name, Eigen::VectorXd values);
    static Column integer(std::string name, Eigen::VectorXd values);
    static Column categorical(std::string name, const std::vector<std::string>& values);
    static Column boolean(std::string name, std::vector<std::uint8_t> flags);
};

/// Immutable columnar table with a designated numeric target column.
/// Construction validates every invariant; a Dataset that exists is valid.
class Dataset {
  public:
    Dataset(std::string name, std::vector<Column> columns, std::string target);

    const std::string& name() const { return name_; }
    const std::string& target() const { return target_; }
    Eigen::Index n_rows() const { return n_rows_; }

    const std::vector<Column>& columns() const { return columns_; }
    const Column* find(std::string_view name) const;
    const Column& column(std::string_view name) const;
    const Eigen::VectorXd& target_values() const;

    /// Same schema and features, different target vector. Used by benchmark
    /// generators that redraw only Y.
    Dataset with_target_values(Eigen::VectorXd y) const;

    bool operator==(const Dataset&) const;

  private:
    std::string name_;
    std::vector<Column> columns_;
    std::string target_;
    Eigen::Index n_rows_ = 0;
};

struct DatasetMetadata {
    std::string description;
    std::map<std::string, std::string> column_descriptions;
};

/// m replicate target vectors drawn from one model, row-aligned with a Dataset.
struct ModelSampleSet {
    std::string model_id;
    std::vector<Eigen::VectorXd> replicates;

    std::size_t m() const { return replicates.size(); }
};

/// Symbolic model handed to the proposer: program text plus an optional
/// structured family descriptor filled in by the synthetic benchmarks.
struct ModelRepresentation {
    std::string program_text;
    nlohmann::ordered_json family;
};

// ingestion --------------------------------------------------------------

/// Loads a .csv (comma separated, header row) or .json dataset.
/// Rejects ragged rows, missing values, and non-finite numerics outright.
Dataset load_dataset(const std::filesystem::path& path, const std::string& target);

/// CSV parsing core, exposed for tests and in-memory callers.
Dataset dataset_from_csv(std::string_view text, std::string name, const std::string& target);
Dataset dataset_from_json(const nlohmann::ordered_json& doc, std::string fallback_name, const std::string& target);

/// Canonical delimited form; load(save(d)) == d, bit for bit.
std::string dataset_to_csv(const Dataset& d);
nlohmann::ordered_json dataset_to_json(const Dataset& d);
void save_dataset(const Dataset& d, const std::filesystem::path& path);

ModelSampleSet load_samples(const std::filesystem::path& path);
ModelSampleSet samples_from_json(const nlohmann::ordered_json& doc);
ModelSampleSet samples_from_csv(std::string_view text);
nlohmann::ordered_json samples_to_json(const ModelSampleSet& s);
void save_samples(const ModelSampleSet& s, const std::filesystem::path& path);

DatasetMetadata load_metadata(const std::filesystem::path& path);
DatasetMetadata metadata_from_json(const nlohmann::ordered_json& doc);
nlohmann::ordered_json metadata_to_json(const DatasetMetadata& m);

/// Every described column must exist when both sides are present.
void validate_metadata(const DatasetMetadata& m, const Dataset& d);

/// Succeeds iff every replicate length equals d.n_rows and m >= 1.
void validate_alignment(const Dataset& d, const ModelSampleSet& s);

} // namespace ppc
