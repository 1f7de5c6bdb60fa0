// One line per acceptance criterion; exit status 0 only when all of them pass.
#include <cstdio>
#include <iostream>

#include "hardylab/battery.hpp"

int main(int argc, char** argv) {
  const std::filesystem::path out = argc > 1 ? argv[1] : "acceptance-out";
  hardylab::BatteryOptions opt;
  opt.on_result = [](const hardylab::CriterionResult& r) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f s", r.seconds);
    std::cout << (r.ok() ? "PASS" : "FAIL") << "  criterion " << r.id << ": " << r.title << "  [" << buf;
    if (r.budget > 0.0) std::cout << ", budget " << r.budget << " s";
    std::cout << "]";
    if (!r.pass) std::cout << "  " << (r.error.empty() ? r.metrics.dump() : r.error);
    std::cout << std::endl;
  };
  const auto rep = hardylab::run_battery(out, opt);
  for (const auto& [name, ok] : rep.catalog)
    if (!ok) std::cout << "FAIL  catalog scenario " << name << "\n";
  return rep.pass() ? 0 : 1;
}
