#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

#include "hardylab/battery.hpp"
#include "hardylab/io.hpp"
#include "hardylab/parallel.hpp"
#include "hardylab/scenario.hpp"

using namespace hardylab;
using nlohmann::json;

namespace {

constexpr int kPass = 0, kFail = 1, kConfig = 2;

// path to a config file, or builtin:<name>
ScenarioConfig resolve_config(const std::string& arg) {
  const std::string prefix = "builtin:";
  if (arg.rfind(prefix, 0) == 0) return builtin_scenario(arg.substr(prefix.size()));
  return load_config(arg);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

int cmd_run(const std::string& config, const std::string& output, bool timings) {
  ScenarioConfig c = resolve_config(config);
  RunOptions o;
  o.timings = timings;
  if (!output.empty()) o.output = output;
  const RunManifest m = run_scenario(c, o);
  for (const auto& [name, ok] : m.summary) std::cout << (ok ? "PASS " : "FAIL ") << name << "\n";
  for (const auto& n : m.notes) std::cout << "note: " << n << "\n";
  std::cout << "manifest: " << ((o.output ? *o.output : fs::path(c.output)) / "manifest.json").string() << "\n";
  return m.pass() ? kPass : kFail;
}

int cmd_sweep(const std::string& config, const std::vector<std::string>& params, const std::string& output,
              int workers) {
  const ScenarioConfig base = resolve_config(config);
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  for (const auto& p : params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == p.size())
      throw ConfigError("--param " + p + ": expected key=v1,v2,...");
    axes.emplace_back(p.substr(0, eq), split(p.substr(eq + 1), ','));
  }
  // Cartesian product, last axis fastest
  std::vector<std::vector<std::string>> combos{{}};
  for (const auto& [key, vals] : axes) {
    std::vector<std::vector<std::string>> next;
    for (const auto& c : combos)
      for (const auto& v : vals) {
        auto e = c;
        e.push_back(v);
        next.push_back(std::move(e));
      }
    combos = std::move(next);
  }
  const fs::path root = output.empty() ? fs::path(base.output) : fs::path(output);
  std::vector<ScenarioConfig> cfgs;
  for (std::size_t i = 0; i < combos.size(); ++i) {
    ScenarioConfig c = base;
    for (std::size_t k = 0; k < axes.size(); ++k) set_config_value(c, axes[k].first, combos[i][k]);
    build_setup(c);  // all preconditions before anything runs
    cfgs.push_back(std::move(c));
  }
  std::vector<json> rows(cfgs.size());
  std::vector<int> codes(cfgs.size(), kPass);
  parallel_for(cfgs.size(), worker_count(workers), [&](std::size_t i) {
    char dir[32];
    std::snprintf(dir, sizeof dir, "run-%04zu", i);
    RunOptions o;
    o.output = root / dir;
    json row = {{"dir", dir}, {"params", json::object()}};
    for (std::size_t k = 0; k < axes.size(); ++k) row["params"][axes[k].first] = combos[i][k];
    try {
      const RunManifest m = run_scenario(cfgs[i], o);
      row["config_hash"] = m.config_hash;
      row["pass"] = m.pass();
      codes[i] = m.pass() ? kPass : kFail;
    } catch (const ScenarioError& e) {
      row["pass"] = false;
      row["error"] = e.what();
      codes[i] = kFail;
    }
    rows[i] = std::move(row);
  });
  json doc = {{"tool_version", kToolVersion}, {"base_config_hash", config_hash(base)}, {"runs", rows}};
  write_file_atomic(root / "sweep.json", doc.dump(2) + "\n");
  int failed = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::cout << (codes[i] == kPass ? "PASS " : "FAIL ") << rows[i]["dir"].get<std::string>();
    for (const auto& [k, v] : rows[i]["params"].items()) std::cout << " " << k << "=" << v.get<std::string>();
    std::cout << "\n";
    failed += codes[i] != kPass;
  }
  std::cout << "sweep: " << rows.size() - failed << "/" << rows.size() << " pass, " << (root / "sweep.json").string()
            << "\n";
  return failed ? kFail : kPass;
}

std::string fixed(double v, int prec) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(prec);
  s << v;
  return s.str();
}

int cmd_verify(const std::string& output, bool determinism) {
  BatteryOptions opt;
  opt.determinism = determinism;
  opt.on_result = [](const CriterionResult& r) {
    std::cout << (r.ok() ? "PASS" : "FAIL") << " [" << r.id << "] " << r.title << " (" << fixed(r.seconds, 1) << " s";
    if (r.budget > 0.0) std::cout << " / " << fixed(r.budget, 0) << " s";
    std::cout << ")";
    if (!r.error.empty()) std::cout << " error: " << r.error;
    std::cout << std::endl;
  };
  const BatteryReport rep = run_battery(output, opt);
  for (const auto& [name, ok] : rep.catalog) std::cout << (ok ? "PASS" : "FAIL") << " catalog " << name << "\n";
  return rep.pass() ? kPass : kFail;
}

// long format: series, x, y; the first column is x
int cmd_export_plots(const std::string& manifest_path, const std::string& output) {
  const fs::path manifest(manifest_path);
  json m;
  try {
    m = json::parse(read_file(manifest));
  } catch (const json::exception& e) {
    throw ConfigError(manifest_path + ": not a manifest (" + e.what() + ")");
  }
  if (!m.contains("files")) throw ConfigError(manifest_path + ": no file list");
  const fs::path dir = manifest.parent_path();
  const fs::path out = output.empty() ? dir / "plots" : fs::path(output);
  int written = 0;
  for (const auto& f : m["files"]) {
    const std::string name = f.get<std::string>();
    if (fs::path(name).extension() != ".csv") continue;
    std::istringstream in(read_file(dir / name));
    std::string line;
    if (!std::getline(in, line)) continue;
    const auto cols = split(line, ',');
    if (cols.size() < 2) continue;
    std::string body = "series," + cols[0] + ",value\n";
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line))
      if (!line.empty()) rows.push_back(split(line, ','));
    for (std::size_t c = 1; c < cols.size(); ++c)
      for (const auto& r : rows)
        if (r.size() == cols.size()) body += cols[c] + "," + r[0] + "," + r[c] + "\n";
    write_file_atomic(out / name, body);
    std::cout << (out / name).string() << "\n";
    ++written;
  }
  if (written == 0) std::cerr << "export-plots: no CSV files listed in " << manifest_path << "\n";
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hardylab: weighted-norm diagnostics for Schrodinger-type evolutions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  std::string config, output, manifest;
  bool timings = false, no_determinism = false;
  int workers = 0;
  std::vector<std::string> params;

  auto* run = app.add_subcommand("run", "run one scenario");
  run->add_option("config", config, "config file, or builtin:<name>")->required();
  run->add_option("-o,--output", output, "output directory (overrides the config)");
  run->add_flag("--timings", timings, "record wall-clock timings in the manifest");

  auto* sweep = app.add_subcommand("sweep", "run a Cartesian parameter sweep");
  sweep->add_option("config", config, "base config file, or builtin:<name>")->required();
  sweep->add_option("-p,--param", params, "dotted.key=v1,v2,... (repeatable)")->required();
  sweep->add_option("-o,--output", output, "sweep root directory");
  sweep->add_option("-j,--workers", workers, "worker count (default: HARDYLAB_WORKERS or all cores)");

  auto* verify = app.add_subcommand("verify", "run the built-in acceptance battery");
  output = "";
  verify->add_option("-o,--output", output, "battery output directory (default: verify-out)");
  verify->add_flag("--no-determinism", no_determinism, "skip the rerun comparison");

  auto* plots = app.add_subcommand("export-plots", "write long-format CSVs for every table in a manifest");
  plots->add_option("manifest", manifest, "manifest.json of a run")->required()->check(CLI::ExistingFile);
  plots->add_option("-o,--output", output, "directory for the plot CSVs (default: <run>/plots)");

  auto* list = app.add_subcommand("list", "print the built-in scenario names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfig;
  }

  try {
    if (*run) return cmd_run(config, output, timings);
    if (*sweep) return cmd_sweep(config, params, output, workers);
    if (*verify) return cmd_verify(output.empty() ? "verify-out" : output, !no_determinism);
    if (*plots) return cmd_export_plots(manifest, output);
    if (*list) {
      for (const auto& n : builtin_names()) std::cout << n << "\n";
      return kPass;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
  return kFail;
}
