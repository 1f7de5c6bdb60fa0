#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "hardylab/scenario.hpp"

namespace hardylab {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
  if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool ok = std::any_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; });
    if (!ok) fail(join(path, it.key()), "unknown key");
  }
}

double get_number(const json& obj, const std::string& path, const char* key, double def) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(join(path, key), "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(join(path, key), "must be finite");
  return x;
}

long long get_int(const json& obj, const std::string& path, const char* key, long long def) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (v.is_number_integer() || v.is_number_unsigned()) return v.get<long long>();
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (std::floor(x) == x && std::abs(x) < 9e15) return static_cast<long long>(x);
  }
  fail(join(path, key), "expected an integer");
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool def) {
  if (!obj.contains(key)) return def;
  if (!obj.at(key).is_boolean()) fail(join(path, key), "expected true or false");
  return obj.at(key).get<bool>();
}

std::string get_string(const json& obj, const std::string& path, const char* key, const std::string& def) {
  if (!obj.contains(key)) return def;
  if (!obj.at(key).is_string()) fail(join(path, key), "expected a string");
  return obj.at(key).get<std::string>();
}

EntryMatrix get_matrix(const json& obj, const std::string& path, const char* key) {
  EntryMatrix m;
  if (!obj.contains(key)) return m;
  const std::string p = join(path, key);
  const json& v = obj.at(key);
  if (!v.is_array()) fail(p, "expected a square array of rows");
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string pi = p + "[" + std::to_string(i) + "]";
    if (!v[i].is_array() || v[i].size() != v.size()) fail(pi, "expected a row of length " + std::to_string(v.size()));
    std::vector<json> row;
    for (std::size_t j = 0; j < v[i].size(); ++j) {
      const json& e = v[i][j];
      if (!e.is_number() && !e.is_string())
        fail(pi + "[" + std::to_string(j) + "]", "expected a number or an expression string");
      if (e.is_string()) {
        try {
          (void)Expression::parse(e.get<std::string>());
        } catch (const ExpressionError& err) {
          fail(pi + "[" + std::to_string(j) + "]", err.what());
        }
      }
      row.push_back(e);
    }
    m.push_back(std::move(row));
  }
  return m;
}

// "line L, column C" from a byte offset
std::string locate(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

const std::set<std::string> kFamilies{"zero", "gaussian", "hermite", "super_gaussian", "sharp_gaussian",
                                      "box", "random_smooth", "file"};
const std::set<std::string> kMethods{"auto", "exact_multiplier", "strang", "duhamel_picard"};

json matrix_json(const EntryMatrix& m) {
  json a = json::array();
  for (const auto& row : m) a.push_back(json(row));
  return a;
}

}  // namespace

ScenarioConfig config_from_json(const json& j) {
  reject_unknown(j, "", {"name", "grid", "evolution", "potential", "initial", "weights", "diagnostics", "carleman",
                         "nonlinearity", "output", "seed"});
  ScenarioConfig c;
  c.name = get_string(j, "", "name", c.name);
  c.output = get_string(j, "", "output", c.output);
  const long long seed = get_int(j, "", "seed", 1);
  if (seed < 0) fail("seed", "must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    reject_unknown(g, "grid", {"dim", "points", "half_width", "components"});
    c.grid.dim = static_cast<int>(get_int(g, "grid", "dim", c.grid.dim));
    c.grid.points = static_cast<int>(get_int(g, "grid", "points", c.grid.points));
    c.grid.half_width = get_number(g, "grid", "half_width", c.grid.half_width);
    c.grid.components = static_cast<int>(get_int(g, "grid", "components", c.grid.components));
    if (c.grid.dim != 1 && c.grid.dim != 2) fail("grid.dim", "must be 1 or 2");
    if (c.grid.points < 8 || (c.grid.points & (c.grid.points - 1)) != 0) fail("grid.points", "must be a power of two >= 8");
    if (!(c.grid.half_width > 0.0)) fail("grid.half_width", "must be positive");
    if (c.grid.components < 1 || c.grid.components > kMaxComponents)
      fail("grid.components", "must be in [1, " + std::to_string(kMaxComponents) + "]");
  }
  if (j.contains("evolution")) {
    const json& e = j.at("evolution");
    reject_unknown(e, "evolution", {"a", "b", "t_final", "steps", "method"});
    c.evolution.a = get_number(e, "evolution", "a", c.evolution.a);
    c.evolution.b = get_number(e, "evolution", "b", c.evolution.b);
    c.evolution.t_final = get_number(e, "evolution", "t_final", c.evolution.t_final);
    c.evolution.steps = static_cast<int>(get_int(e, "evolution", "steps", c.evolution.steps));
    c.evolution.method = get_string(e, "evolution", "method", c.evolution.method);
    if (c.evolution.a < 0.0) fail("evolution.a", "must be >= 0");
    if (c.evolution.a == 0.0 && c.evolution.b == 0.0) fail("evolution", "a and b cannot both vanish");
    if (!(c.evolution.t_final > 0.0 && c.evolution.t_final <= 1.0)) fail("evolution.t_final", "must lie in (0, 1]");
    if (c.evolution.steps < 1 || c.evolution.steps > 1 << 16) fail("evolution.steps", "must be in [1, 65536]");
    if (!kMethods.count(c.evolution.method))
      fail("evolution.method", "unknown method '" + c.evolution.method + "'");
  }
  if (j.contains("potential")) {
    const json& p = j.at("potential");
    reject_unknown(p, "potential", {"A", "V1", "V2"});
    c.potential.A = get_matrix(p, "potential", "A");
    for (const char* key : {"V1", "V2"}) {
      if (!p.contains(key)) continue;
      const std::string path = join("potential", key);
      reject_unknown(p.at(key), path, {"re", "im"});
      auto& re = key[1] == '1' ? c.potential.v1_re : c.potential.v2_re;
      auto& im = key[1] == '1' ? c.potential.v1_im : c.potential.v2_im;
      re = get_matrix(p.at(key), path, "re");
      im = get_matrix(p.at(key), path, "im");
    }
  }
  if (j.contains("initial")) {
    const json& in = j.at("initial");
    reject_unknown(in, "initial", {"family", "params", "component", "path"});
    c.initial.family = get_string(in, "initial", "family", c.initial.family);
    if (!kFamilies.count(c.initial.family)) fail("initial.family", "unknown family '" + c.initial.family + "'");
    c.initial.component = static_cast<int>(get_int(in, "initial", "component", c.initial.component));
    c.initial.path = get_string(in, "initial", "path", "");
    if (in.contains("params")) {
      const json& ps = in.at("params");
      if (!ps.is_object()) fail("initial.params", "expected an object");
      for (auto it = ps.begin(); it != ps.end(); ++it)
        c.initial.params[it.key()] = get_number(ps, "initial.params", it.key().c_str(), 0.0);
    }
  }
  if (j.contains("weights")) {
    const json& w = j.at("weights");
    reject_unknown(w, "weights", {"alpha", "beta", "gamma"});
    c.alpha = get_number(w, "weights", "alpha", c.alpha);
    c.beta = get_number(w, "weights", "beta", c.beta);
    c.gamma = get_number(w, "weights", "gamma", c.gamma);
    if (!(c.alpha > 0.0)) fail("weights.alpha", "must be positive");
    if (!(c.beta > 0.0)) fail("weights.beta", "must be positive");
    if (c.gamma < 0.0) fail("weights.gamma", "must be >= 0");
  }
  if (j.contains("diagnostics")) {
    const json& d = j.at("diagnostics");
    reject_unknown(d, "diagnostics",
                   {"convexity", "interpolation_bound", "hardy", "appell", "carleman", "theorem1", "snapshots"});
    auto& D = c.diagnostics;
    D.convexity = get_bool(d, "diagnostics", "convexity", false);
    D.interpolation_bound = get_bool(d, "diagnostics", "interpolation_bound", false);
    D.hardy = get_bool(d, "diagnostics", "hardy", false);
    D.appell = get_bool(d, "diagnostics", "appell", false);
    D.carleman = get_bool(d, "diagnostics", "carleman", false);
    D.theorem1 = get_bool(d, "diagnostics", "theorem1", false);
    D.snapshots = get_bool(d, "diagnostics", "snapshots", false);
  }
  if (j.contains("carleman")) {
    const json& k = j.at("carleman");
    reject_unknown(k, "carleman", {"mu", "r", "eps", "probes", "time_samples", "points", "half_width"});
    auto& K = c.carleman;
    K.mu = get_number(k, "carleman", "mu", K.mu);
    K.r = get_number(k, "carleman", "r", K.r);
    K.eps = get_number(k, "carleman", "eps", K.eps);
    K.probes = static_cast<int>(get_int(k, "carleman", "probes", K.probes));
    K.time_samples = static_cast<int>(get_int(k, "carleman", "time_samples", K.time_samples));
    K.points = static_cast<int>(get_int(k, "carleman", "points", K.points));
    K.half_width = get_number(k, "carleman", "half_width", K.half_width);
    if (!(K.mu > 0.0)) fail("carleman.mu", "must be positive");
    if (!(K.r > 0.0)) fail("carleman.r", "must be positive");
    if (!(K.eps > 0.0)) fail("carleman.eps", "must be positive");
    if (K.probes < 1) fail("carleman.probes", "must be >= 1");
    if (K.time_samples < 9) fail("carleman.time_samples", "must be >= 9");
    if (K.points < 8 || (K.points & (K.points - 1)) != 0) fail("carleman.points", "must be a power of two >= 8");
    if (!(K.half_width > 0.0)) fail("carleman.half_width", "must be positive");
  }
  if (j.contains("nonlinearity")) {
    const json& n = j.at("nonlinearity");
    reject_unknown(n, "nonlinearity", {"lambda", "sigma"});
    NonlinearityConfig nl;
    nl.lambda = get_number(n, "nonlinearity", "lambda", 0.0);
    nl.sigma = static_cast<int>(get_int(n, "nonlinearity", "sigma", 1));
    if (nl.sigma < 1 || nl.sigma > 4) fail("nonlinearity.sigma", "must be in [1, 4]");
    c.nonlinearity = nl;
  }
  return c;
}

ScenarioConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(locate(text, e.byte == 0 ? 0 : e.byte - 1) + ": malformed document (" + e.what() + ")");
  }
  return config_from_json(j);
}

ScenarioConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  try {
    return parse_config(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json config_to_json(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  j["output"] = c.output;
  j["seed"] = c.seed;
  j["grid"] = {{"dim", c.grid.dim},
               {"points", c.grid.points},
               {"half_width", c.grid.half_width},
               {"components", c.grid.components}};
  j["evolution"] = {{"a", c.evolution.a},
                    {"b", c.evolution.b},
                    {"t_final", c.evolution.t_final},
                    {"steps", c.evolution.steps},
                    {"method", c.evolution.method}};
  json pot = json::object();
  if (!c.potential.A.empty()) pot["A"] = matrix_json(c.potential.A);
  auto vpart = [&](const char* key, const EntryMatrix& re, const EntryMatrix& im) {
    if (re.empty() && im.empty()) return;
    json v = json::object();
    if (!re.empty()) v["re"] = matrix_json(re);
    if (!im.empty()) v["im"] = matrix_json(im);
    pot[key] = v;
  };
  vpart("V1", c.potential.v1_re, c.potential.v1_im);
  vpart("V2", c.potential.v2_re, c.potential.v2_im);
  j["potential"] = pot;
  json init = {{"family", c.initial.family}, {"component", c.initial.component}, {"params", json::object()}};
  for (const auto& [k, v] : c.initial.params) init["params"][k] = v;
  if (!c.initial.path.empty()) init["path"] = c.initial.path;
  j["initial"] = init;
  j["weights"] = {{"alpha", c.alpha}, {"beta", c.beta}, {"gamma", c.gamma}};
  const auto& D = c.diagnostics;
  j["diagnostics"] = {{"convexity", D.convexity}, {"interpolation_bound", D.interpolation_bound},
                      {"hardy", D.hardy},         {"appell", D.appell},
                      {"carleman", D.carleman},   {"theorem1", D.theorem1},
                      {"snapshots", D.snapshots}};
  const auto& K = c.carleman;
  j["carleman"] = {{"mu", K.mu},          {"r", K.r},
                   {"eps", K.eps},        {"probes", K.probes},
                   {"time_samples", K.time_samples}, {"points", K.points},
                   {"half_width", K.half_width}};
  if (c.nonlinearity) j["nonlinearity"] = {{"lambda", c.nonlinearity->lambda}, {"sigma", c.nonlinearity->sigma}};
  return j;
}

std::string serialize_config(const ScenarioConfig& c) { return config_to_json(c).dump(2) + "\n"; }

std::string config_hash(const ScenarioConfig& c) { return hex64(fnv1a64(config_to_json(c).dump())); }

void set_config_value(ScenarioConfig& c, const std::string& key, const std::string& value) {
  json j = config_to_json(c);
  json v;
  try {
    v = json::parse(value);
  } catch (const json::parse_error&) {
    v = value;  // bare word: a string
  }
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) fail(key, "bad key");
    if (dot == std::string::npos) {
      if (!node->is_object()) fail(key, "parent is not a section");
      (*node)[part] = v;
      break;
    }
    if (!node->contains(part)) (*node)[part] = json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
  c = config_from_json(j);
}

}  // namespace hardylab
