#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psival/binning/binning.hpp"
#include "psival/errors.hpp"

namespace psival::party {

struct Column {
  std::string name;
  std::vector<double> values;
  binning::BinningSpec spec;
};

/// One party's rows: distinct non-empty IDs, numeric feature columns and, for
/// the task party, the label column.
struct PartyDataset {
  std::string party_id;
  std::vector<std::string> ids;
  std::vector<Column> features;
  std::optional<Column> label;

  std::size_t rows() const noexcept { return ids.size(); }
};

struct IngestOptions {
  std::string id_column = "id";
  std::optional<std::string> label_column;
  char delimiter = ',';
  // Empty: every column except the id and label columns, in file order.
  std::vector<std::string> feature_columns;
  binning::BinningSpec default_spec{};
  std::map<std::string, binning::BinningSpec> column_specs;
};

enum class IngestErrorKind { Unreadable, EmptyFile, MissingColumn, RaggedRow, EmptyId, DuplicateId, MissingValue, NonNumeric };

class IngestError : public InputError {
 public:
  IngestError(IngestErrorKind kind, const std::string& message, std::size_t line = 0, std::string column = {})
      : InputError(message), kind_(kind), line_(line), column_(std::move(column)) {}

  IngestErrorKind kind() const noexcept { return kind_; }
  /// 1-based line in the file (the header is line 1); 0 when not row-specific.
  std::size_t line() const noexcept { return line_; }
  const std::string& column() const noexcept { return column_; }

 private:
  IngestErrorKind kind_;
  std::size_t line_;
  std::string column_;
};

/// Parses a headed CSV file. The label column is binned categorically.
/// Empty cells and NA/NaN markers are missing values and are rejected.
PartyDataset ingest_csv(const std::filesystem::path& path, const std::string& party_id,
                        const IngestOptions& options);

}  // namespace psival::party
