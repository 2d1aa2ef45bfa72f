#include "psival/party/dataset.hpp"

#include <boost/tokenizer.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "psival/ident/crypto.hpp"

namespace psival::party {

namespace {

using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;

std::vector<std::string> split_line(const std::string& line, char delimiter, std::size_t line_no) {
  try {
    Tokenizer tok(line, boost::escaped_list_separator<char>('\\', delimiter, '"'));
    std::vector<std::string> cells(tok.begin(), tok.end());
    return cells;
  } catch (const boost::escaped_list_error&) {
    throw IngestError(IngestErrorKind::RaggedRow, "line " + std::to_string(line_no) + ": malformed quoting",
                      line_no);
  }
}

std::string trimmed(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool is_missing(const std::string& cell) {
  if (cell.empty()) return true;
  std::string lower(cell);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return lower == "na" || lower == "nan" || lower == "null" || lower == "?";
}

double parse_cell(const std::string& cell, std::size_t line_no, const std::string& column) {
  if (is_missing(cell)) {
    throw IngestError(IngestErrorKind::MissingValue,
                      "line " + std::to_string(line_no) + ", column " + column + ": missing value", line_no, column);
  }
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw IngestError(IngestErrorKind::NonNumeric,
                      "line " + std::to_string(line_no) + ", column " + column + ": not a finite number",
                      line_no, column);
  }
  return v;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw IngestError(IngestErrorKind::MissingColumn, "column " + name + " not found", 1, name);
  }
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

PartyDataset ingest_csv(const std::filesystem::path& path, const std::string& party_id,
                        const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw IngestError(IngestErrorKind::Unreadable, "cannot read " + path.string());

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (trimmed(line).empty()) continue;
    for (auto& cell : split_line(line, options.delimiter, line_no)) header.push_back(trimmed(cell));
  }
  if (header.empty()) throw IngestError(IngestErrorKind::EmptyFile, path.string() + " is empty");

  const std::size_t id_col = column_index(header, options.id_column);
  std::optional<std::size_t> label_col;
  if (options.label_column) label_col = column_index(header, *options.label_column);

  std::vector<std::size_t> feature_cols;
  if (options.feature_columns.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i != id_col && i != label_col) feature_cols.push_back(i);
    }
  } else {
    for (const auto& name : options.feature_columns) feature_cols.push_back(column_index(header, name));
  }

  PartyDataset ds;
  ds.party_id = party_id;
  for (std::size_t c : feature_cols) {
    const auto spec_it = options.column_specs.find(header[c]);
    ds.features.push_back(
        Column{header[c], {}, spec_it != options.column_specs.end() ? spec_it->second : options.default_spec});
  }
  if (label_col) ds.label = Column{header[*label_col], {}, {1, binning::Strategy::Categorical}};

  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trimmed(line).empty()) continue;
    auto cells = split_line(line, options.delimiter, line_no);
    if (cells.size() != header.size()) {
      throw IngestError(IngestErrorKind::RaggedRow,
                        "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " cells, found " + std::to_string(cells.size()),
                        line_no);
    }
    for (auto& cell : cells) cell = trimmed(std::move(cell));

    const std::string id = ident::canonicalize_id(cells[id_col]);
    if (id.empty()) {
      throw IngestError(IngestErrorKind::EmptyId, "line " + std::to_string(line_no) + ": empty id", line_no,
                        options.id_column);
    }
    if (!seen.insert(id).second) {
      throw IngestError(IngestErrorKind::DuplicateId, "line " + std::to_string(line_no) + ": duplicate id " + id,
                        line_no, options.id_column);
    }
    ds.ids.push_back(id);
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      ds.features[k].values.push_back(parse_cell(cells[feature_cols[k]], line_no, header[feature_cols[k]]));
    }
    if (label_col) ds.label->values.push_back(parse_cell(cells[*label_col], line_no, header[*label_col]));
  }
  if (ds.ids.empty()) throw IngestError(IngestErrorKind::EmptyFile, path.string() + " has no data rows");
  return ds;
}

}  // namespace psival::party
