#pragma once

#include "json.hpp"
#include <string>
#include <vector>

namespace hardylab {

// shortest representation that reads back to the same double; nan/inf spelled out
std::string format_double(double v);

// Column table with a fixed column order, serialized to CSV ("\n" endings) or JSON.
class Table {
 public:
  Table() = default;
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add_row(std::vector<double> row);
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  std::vector<double> column(const std::string& name) const;

  std::string to_csv() const;
  nlohmann::json to_json() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

// NaN and infinities do not exist in JSON; they are written as strings
nlohmann::json json_number(double v);

}  // namespace hardylab
