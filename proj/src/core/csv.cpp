#include "amortss/core/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace amortss {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, end);
}

double parse_double(const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  if (first < last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw std::invalid_argument("not a number: '" + text + "'");
  }
  return value;
}

void write_table(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << row[j];
    }
    out << '\n';
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

CsvTable read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty csv: " + path.string());
  table.header = split_line(line);
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto row = split_line(line);
    if (row.size() != table.header.size()) {
      throw std::invalid_argument("ragged csv row in " + path.string());
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_csv(const std::filesystem::path& path, const TimeSeries& series) {
  CsvTable table;
  table.header = series.names();
  const auto& v = series.values();
  table.rows.reserve(static_cast<std::size_t>(v.rows()));
  for (Eigen::Index t = 0; t < v.rows(); ++t) {
    std::vector<std::string> row;
    for (Eigen::Index j = 0; j < v.cols(); ++j) row.push_back(format_double(v(t, j)));
    table.rows.push_back(std::move(row));
  }
  write_table(path, table);
}

TimeSeries read_csv(const std::filesystem::path& path) {
  const CsvTable table = read_table(path);
  Eigen::MatrixXd values(static_cast<Eigen::Index>(table.rows.size()),
                         static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t t = 0; t < table.rows.size(); ++t) {
    for (std::size_t j = 0; j < table.header.size(); ++j) {
      values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) =
          parse_double(table.rows[t][j]);
    }
  }
  return TimeSeries(std::move(values), table.header);
}

}  // namespace amortss
