#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hardylab/carleman.hpp"
#include "hardylab/io.hpp"
#include "hardylab/weights.hpp"

namespace hardylab {

inline constexpr const char* kToolVersion = "hardylab 0.3.0";

// bad configuration: message names the field (dotted path) or the line and column
class ConfigError : public Error {
 public:
  using Error::Error;
};

// module error raised while a scenario runs, tagged with the stage
class ScenarioError : public Error {
 public:
  ScenarioError(const std::string& stage, const std::string& msg) : Error(stage + ": " + msg), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct GridConfig {
  int dim = 1;
  int points = 256;
  double half_width = 16.0;
  int components = 1;
  bool operator==(const GridConfig&) const = default;
};

struct EvolutionConfig {
  double a = 0.0;
  double b = 1.0;
  double t_final = 1.0;
  int steps = 64;
  std::string method = "auto";  // auto | exact_multiplier | strang | duhamel_picard
  bool operator==(const EvolutionConfig&) const = default;
};

// entries are numbers or expression strings over x1, x2 (and t for V2)
using EntryMatrix = std::vector<std::vector<nlohmann::json>>;

struct PotentialConfig {
  EntryMatrix A;  // empty: zero
  EntryMatrix v1_re, v1_im, v2_re, v2_im;
  bool operator==(const PotentialConfig&) const = default;
};

struct InitialConfig {
  std::string family = "gaussian";  // zero | gaussian | hermite | super_gaussian | sharp_gaussian | box | random_smooth | file
  std::map<std::string, double> params;
  int component = 0;  // -1: every component
  std::string path;   // snapshot file for family "file"
  bool operator==(const InitialConfig&) const = default;
};

struct DiagnosticsConfig {
  bool convexity = false;
  bool interpolation_bound = false;
  bool hardy = false;
  bool appell = false;
  bool carleman = false;
  bool theorem1 = false;
  bool snapshots = false;
  bool operator==(const DiagnosticsConfig&) const = default;
};

struct CarlemanConfig {
  double mu = 1.0;
  double r = 2.0;
  double eps = 1.0;
  int probes = 4;
  int time_samples = 61;
  int points = 64;
  double half_width = 4.0;
  bool operator==(const CarlemanConfig&) const = default;
};

struct NonlinearityConfig {
  double lambda = 0.0;
  int sigma = 1;
  bool operator==(const NonlinearityConfig&) const = default;
};

struct ScenarioConfig {
  std::string name = "scenario";
  GridConfig grid;
  EvolutionConfig evolution;
  PotentialConfig potential;
  InitialConfig initial;
  double alpha = 1.0, beta = 1.0, gamma = 0.0;
  DiagnosticsConfig diagnostics;
  CarlemanConfig carleman;
  std::optional<NonlinearityConfig> nonlinearity;
  std::string output = "out";
  std::uint64_t seed = 1;

  bool operator==(const ScenarioConfig&) const = default;
};

ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const fs::path& path);
nlohmann::json config_to_json(const ScenarioConfig& c);
ScenarioConfig config_from_json(const nlohmann::json& j);
// canonical text: sorted keys, two-space indent, trailing newline
std::string serialize_config(const ScenarioConfig& c);
std::string config_hash(const ScenarioConfig& c);
// set a dotted key ("weights.alpha") from text, as the sweep command does
void set_config_value(ScenarioConfig& c, const std::string& key, const std::string& value);

// Objects a config describes, validated up front.
struct ScenarioSetup {
  Grid grid;
  EvolutionCoefficients coef;
  MatrixPotential A;
  TimePotential V;
  Field u0;
  WeightSpec weights;
  EvolutionPlan plan;
};
ScenarioSetup build_setup(const ScenarioConfig& c);
Field build_initial(const InitialConfig& ic, const Grid& grid, const WeightSpec& w, double t_final, std::uint64_t seed);

struct RunOptions {
  bool timings = false;  // wall clock in the manifest; off keeps output byte-stable
  std::optional<fs::path> output;
};

struct RunManifest {
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::vector<std::string> files;                // relative to the output directory, sorted
  std::vector<std::pair<std::string, bool>> summary;  // diagnostic -> pass
  std::vector<std::pair<std::string, double>> timings;
  std::vector<std::string> notes;

  bool pass() const;
  nlohmann::json to_json() const;
};

RunManifest run_scenario(const ScenarioConfig& c, const RunOptions& opt = {});

// ---------------------------------------------------------------- built-in experiments

ScenarioConfig builtin_scenario(const std::string& name);
std::vector<std::string> builtin_names();

struct FrontierRow {
  std::string family;
  double alpha = 0.0, beta = 0.0;
  bool admissible = false;
  double log_norm0 = 0.0, log_norm1 = 0.0;  // natural logs; -inf for zero data
  bool finite0 = false, finite1 = false;    // weighted integrand tail-resolved on the box
  double solution_norm = 0.0;               // max_t |u(t)|
  bool candidate = false;                   // admissible, both finite, solution not ~ 0
};

struct FrontierReport {
  std::vector<FrontierRow> rows;
  std::size_t candidates = 0;
  // sharp Gaussian at alpha beta = 4T: envelope product and norms with 5% slack
  double sharp_alpha = 0.0, sharp_beta = 0.0, sharp_product = 0.0, sharp_norm = 0.0;
  bool sharp_finite = false;
  bool sharp_survives = false;
  bool hypotheses_hold = true;  // dilation and Im-positivity surrogates on the base potentials
  double falsification_tol = 1e-8;

  bool pass() const { return candidates == 0 && sharp_survives && hypotheses_hold; }
  Table table() const;
};

// base supplies grid, evolution and potentials; each family replaces the initial data
FrontierReport theorem1_falsification_sweep(const ScenarioConfig& base, const std::vector<double>& alphas,
                                            const std::vector<double>& betas,
                                            const std::vector<InitialConfig>& families, double falsification_tol = 1e-8);

struct Theorem4Report {
  std::vector<double> deltas, log_norms, oracle_log_norms;
  std::vector<bool> finite;
  double fitted_delta = 0.0;   // spatial envelope of u(1): |u| ~ e^{-|x|^2 / fitted^2}
  double oracle_gap = 0.0;     // max |norm / oracle - 1| over finite deltas with an oracle, 0 without one
  double solution_gap = 0.0;   // sup |u(1) - oracle| / sup |oracle| when a closed form exists
  bool consistent = true;      // finite exactly when delta clears the fitted rate (10% band excluded)
  bool degenerate = false;
  bool below_one_finite = false;  // any delta < 1 finite would contradict uniqueness

  bool pass() const { return consistent && !below_one_finite; }
  Table table() const;
};

Theorem4Report theorem4_parabolic_scenario(const ScenarioConfig& c, const std::vector<double>& deltas);

struct SystemReport {
  std::vector<double> times, total_norm;
  std::vector<std::vector<double>> component_norms;
  double oracle_gap = 0.0;   // sup over samples of |u - exp oracle|, relative to sup |u0|
  double norm_drift = 0.0;   // max |norm(t) / norm(0) - 1|
  bool exchange = false;     // some component's norm changes by more than 1%

  Table table() const;
};

// full-spectrum matrix-exponential oracle per Fourier mode; needs constant A and V = 0
SystemReport system_scenario_n(const ScenarioConfig& c);

struct NonlinearReport {
  std::vector<double> times, w_norm, linear_gap;
  double log_norm0 = 0.0, log_norm1 = 0.0;  // weighted endpoint norms of w, natural logs
  bool finite0 = false, finite1 = false;
  double growth_rate = 0.0;  // max_t log(|w(t)| / |w(0)|) / t
  double max_w = 0.0;

  Table table() const;
};

NonlinearReport nonlinear_difference_scenario(const ScenarioConfig& c, const InitialConfig& second);

}  // namespace hardylab
