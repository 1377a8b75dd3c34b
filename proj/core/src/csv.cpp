// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#include "prepivot/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "prepivot/error.hpp"

namespace prepivot {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '"')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '"')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_cell(const std::string& cell, const std::string& where) {
  require(!cell.empty(), ErrorKind::io, "missing value at " + where);
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  require(ec == std::errc() && ptr == last && std::isfinite(value), ErrorKind::io,
          "cannot parse '" + cell + "' as a number at " + where);
  return value;
}

// Columns named prefix1, prefix2, ... in numeric order; stops at the first gap.
std::vector<Index> numbered_columns(const std::map<std::string, Index>& index,
                                    const std::string& prefix, std::vector<std::string>& names) {
  std::vector<Index> cols;
  for (int j = 1;; ++j) {
    const auto it = index.find(prefix + std::to_string(j));
    if (it == index.end()) break;
    cols.push_back(it->second);
    names.push_back(it->first);
  }
  return cols;
}

}  // namespace

NumericTable parse_numeric_csv(std::istream& in, const std::string& source) {
  NumericTable table;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::schema, source + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  table.header = split(line);
  for (const auto& name : table.header) {
    require(!name.empty(), ErrorKind::schema, source + ": empty column name in header");
  }
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    require(cells.size() == table.header.size(), ErrorKind::io,
            source + ":" + std::to_string(line_no) + ": expected " +
                std::to_string(table.header.size()) + " fields, found " + std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      row[j] = parse_cell(cells[j], source + ":" + std::to_string(line_no) + " column '" +
                                        table.header[j] + "'");
    }
    rows.push_back(std::move(row));
  }
  table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) table.values(i, j) = rows[i][j];
  }
  return table;
}

NumericTable read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::io, "cannot open " + path);
  return parse_numeric_csv(in, path);
}

ObservedStudy study_from_table(const NumericTable& table, int arm_count, StudyColumns* columns) {
  std::map<std::string, Index> index;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    require(index.emplace(table.header[j], static_cast<Index>(j)).second, ErrorKind::schema,
            "duplicate column '" + table.header[j] + "'");
  }
  StudyColumns names;
  const auto z_it = index.find("z");
  require(z_it != index.end(), ErrorKind::schema, "required column 'z' (arm label) is missing");
  const auto ycols = numbered_columns(index, "y", names.outcomes);
  require(!ycols.empty(), ErrorKind::schema, "required column 'y1' (first outcome) is missing");
  const auto xcols = numbered_columns(index, "x", names.covariates);
  const auto pair_it = index.find("pair");
  names.has_pairs = pair_it != index.end();

  const Index n = table.values.rows();
  require(n >= 2, ErrorKind::io, "study file needs at least 2 data rows");
  Matrix y(n, static_cast<Index>(ycols.size()));
  Matrix x(n, static_cast<Index>(xcols.size()));
  Assignment z(n);
  int max_label = 0;
  for (Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < ycols.size(); ++j) y(i, j) = table.values(i, ycols[j]);
    for (std::size_t j = 0; j < xcols.size(); ++j) x(i, j) = table.values(i, xcols[j]);
    const double label = table.values(i, z_it->second);
    require(label >= 0 && label <= 254 && std::floor(label) == label, ErrorKind::io,
            "row " + std::to_string(i + 2) + ": arm label must be a small nonnegative integer");
    z[i] = static_cast<std::uint8_t>(label);
    max_label = std::max(max_label, static_cast<int>(label));
  }
  if (arm_count == 0) arm_count = std::max(2, max_label + 1);

  std::vector<UnitPair> pairs;
  if (names.has_pairs) {
    std::map<double, std::size_t> slot;
    std::vector<std::vector<Index>> members;
    for (Index i = 0; i < n; ++i) {
      const double id = table.values(i, pair_it->second);
      const auto [it, inserted] = slot.emplace(id, members.size());
      if (inserted) members.emplace_back();
      members[it->second].push_back(i);
    }
    for (const auto& m : members) {
      require(m.size() == 2, ErrorKind::invalid_design,
              "pair ids must each occur exactly twice");
      pairs.push_back({m[0], m[1]});
    }
  }
  if (columns) *columns = names;
  return ObservedStudy(std::move(y), std::move(z), std::move(x), arm_count, std::move(pairs));
}

ObservedStudy read_study_csv(const std::string& path, int arm_count, StudyColumns* columns) {
  return study_from_table(read_numeric_csv(path), arm_count, columns);
}

void write_study_csv(std::ostream& out, const ObservedStudy& study) {
  std::vector<Index> pair_of(study.n_units(), -1);
  for (std::size_t p = 0; p < study.pairs().size(); ++p) {
    pair_of[study.pairs()[p][0]] = pair_of[study.pairs()[p][1]] = static_cast<Index>(p);
  }
  for (Index j = 0; j < study.outcome_dim(); ++j) out << 'y' << j + 1 << ',';
  out << 'z';
  for (Index j = 0; j < study.covariate_dim(); ++j) out << ",x" << j + 1;
  if (study.is_paired()) out << ",pair";
  out << '\n';
  std::ostringstream cell;
  cell.precision(17);
  for (Index i = 0; i < study.n_units(); ++i) {
    cell.str("");
    for (Index j = 0; j < study.outcome_dim(); ++j) cell << study.outcomes()(i, j) << ',';
    cell << static_cast<int>(study.assignment()[i]);
    for (Index j = 0; j < study.covariate_dim(); ++j) cell << ',' << study.covariates()(i, j);
    if (study.is_paired()) cell << ',' << pair_of[i];
    out << cell.str() << '\n';
  }
}

}  // namespace prepivot
