#include "pipkit/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <string_view>

namespace pipkit {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

std::string unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

double parse_cell(std::string_view cell, std::size_t line_no, std::string_view column) {
  auto fail = [&](const char* why) {
    std::ostringstream msg;
    msg << "line " << line_no << ", column '" << column << "': " << why;
    throw CsvError(msg.str());
  };
  if (cell.empty()) fail("missing value");
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto* first = cell.data();
  const auto* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::general);
  if (ec != std::errc() || ptr != last) fail("not a plain decimal number");
  return value;
}

}  // namespace

Dataset read_csv(std::istream& in, const std::string& outcome,
                 const std::vector<std::string>& covariates) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw CsvError("empty input: header row missing");

  std::vector<std::string> header;
  for (auto f : split_fields(line)) header.push_back(unquote(f));

  auto find = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw CsvError("column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t outcome_col = find(outcome);
  std::vector<std::string> keep = covariates;
  if (keep.empty()) {
    for (const auto& h : header) {
      if (h != outcome) keep.push_back(h);
    }
  }
  std::vector<std::size_t> keep_idx;
  keep_idx.reserve(keep.size());
  for (const auto& name : keep) {
    if (name == outcome) throw CsvError("outcome column '" + name + "' listed as covariate");
    keep_idx.push_back(find(name));
  }

  std::vector<double> y;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw CsvError("line " + std::to_string(line_no) + ": expected " +
                     std::to_string(header.size()) + " fields, found " +
                     std::to_string(fields.size()));
    }
    y.push_back(parse_cell(fields[outcome_col], line_no, header[outcome_col]));
    std::vector<double> row;
    row.reserve(keep_idx.size());
    for (auto j : keep_idx) row.push_back(parse_cell(fields[j], line_no, header[j]));
    rows.push_back(std::move(row));
  }

  const auto n = static_cast<Eigen::Index>(y.size());
  if (n < 2) throw CsvError("at least two data rows required");
  Eigen::VectorXd yy(n);
  Eigen::MatrixXd xx(n, static_cast<Eigen::Index>(keep.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    yy(i) = y[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < keep.size(); ++j) {
      xx(i, static_cast<Eigen::Index>(j)) = rows[static_cast<std::size_t>(i)][j];
    }
  }
  try {
    return Dataset(std::move(yy), std::move(xx), std::move(keep));
  } catch (const std::invalid_argument& e) {
    throw CsvError(e.what());
  }
}

Dataset read_csv_file(const std::string& path, const std::string& outcome,
                      const std::vector<std::string>& covariates) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open '" + path + "'");
  return read_csv(in, outcome, covariates);
}

}  // namespace pipkit
