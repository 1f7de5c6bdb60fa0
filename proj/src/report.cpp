#include "hardylab/report.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace hardylab {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

void Table::add_row(std::vector<double> row) {
  if (row.size() != columns_.size()) throw std::invalid_argument("table row has the wrong number of cells");
  rows_.push_back(std::move(row));
}

std::vector<double> Table::column(const std::string& name) const {
  for (std::size_t j = 0; j < columns_.size(); ++j)
    if (columns_[j] == name) {
      std::vector<double> out;
      out.reserve(rows_.size());
      for (const auto& r : rows_) out.push_back(r[j]);
      return out;
    }
  throw std::invalid_argument("no column named " + name);
}

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (j) out += ',';
    out += columns_[j];
  }
  out += '\n';
  for (const auto& r : rows_) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j) out += ',';
      out += format_double(r[j]);
    }
    out += '\n';
  }
  return out;
}

nlohmann::json Table::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rows_) {
    nlohmann::json row = nlohmann::json::array();
    for (double v : r) row.push_back(json_number(v));
    rows.push_back(std::move(row));
  }
  return {{"columns", columns_}, {"rows", std::move(rows)}};
}

}  // namespace hardylab
