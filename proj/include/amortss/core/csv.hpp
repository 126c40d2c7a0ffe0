#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "amortss/core/types.hpp"

namespace amortss {

/// Formats a double so that parsing it back gives the identical value.
std::string format_double(double value);
double parse_double(const std::string& text);

/// Header row with column names, then one row per time step.
void write_csv(const std::filesystem::path& path, const TimeSeries& series);
TimeSeries read_csv(const std::filesystem::path& path);

/// Generic table helpers shared by the report writers.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
void write_table(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_table(const std::filesystem::path& path);

}  // namespace amortss
