#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "voe/gaussian.hpp"
#include "voe/studies.hpp"

namespace voe {

struct RejectedRow {
  std::size_t line = 0;  // 1-based line number in the file
  std::string reason;
};

struct LoadedStudies {
  StudySet studies;
  std::vector<RejectedRow> rejected;
};

/// Reads a headered CSV with columns study_id, tau_hat, se (any order, extra
/// columns ignored). Rows with non-finite values or se <= 0 are rejected and
/// reported; fewer than two valid rows is a DataError.
LoadedStudies parse_studies(std::istream& in);
LoadedStudies load_studies(const std::filesystem::path& path);

/// Shortest round-trip decimal for every number.
void write_studies(std::ostream& out, const StudySet& studies);
void write_studies(const std::filesystem::path& path, const StudySet& studies);

/// Precision cost table: headered CSV with columns sigma_sq, cost.
std::vector<CostModel::Knot> load_cost_table(const std::filesystem::path& path);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);
/// Fixed four-decimal rendering used by human-readable tables.
std::string format4(double v);

}  // namespace voe
