#ifndef PIPKIT_CSV_HPP
#define PIPKIT_CSV_HPP

#include "pipkit/core.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace pipkit {

struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Reads a comma-separated table into a Dataset.
///
/// The first row is the header. `outcome` names the outcome column and
/// `covariates` the columns to keep, in order (empty keeps every other
/// column). Cells are parsed as plain decimals with '.' as the decimal
/// point; empty cells, thousands separators, or trailing garbage raise
/// CsvError with the offending line number.
Dataset read_csv(std::istream& in, const std::string& outcome,
                 const std::vector<std::string>& covariates = {});
Dataset read_csv_file(const std::string& path, const std::string& outcome,
                      const std::vector<std::string>& covariates = {});

}  // namespace pipkit

#endif  // PIPKIT_CSV_HPP
