#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace hardylab {

struct CriterionResult {
  int id = 0;
  std::string key;    // short slug, also the artifact stem
  std::string title;
  bool pass = false;  // numerical checks only
  double seconds = 0.0;
  double budget = 0.0;  // seconds, 0 = none
  nlohmann::json metrics = nlohmann::json::object();
  std::string error;  // set when the criterion threw

  bool within_budget() const { return budget <= 0.0 || seconds <= budget; }
  bool ok() const { return pass && within_budget(); }
};

struct BatteryOptions {
  bool determinism = true;  // rerun into a scratch tree and compare bytes
  bool catalog = true;      // built-in scenarios under catalog/
  std::function<void(const CriterionResult&)> on_result;
};

struct BatteryReport {
  std::vector<CriterionResult> criteria;
  std::vector<std::pair<std::string, bool>> catalog;
  bool pass() const;
};

// Writes battery.json, one CSV per criterion and the catalog runs under out.
BatteryReport run_battery(const std::filesystem::path& out, const BatteryOptions& opt = {});

}  // namespace hardylab
