#include "tlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "tlab/error.hpp"
#include "tlab/io.hpp"

namespace tlab {

using nlohmann::json;

const std::vector<PresetInfo>& preset_catalog() {
  static const std::vector<PresetInfo> catalog = {
      {"kpp", "kpp", json{{"r", 1.0}}, "monostable, minimal speed c_* = 2 sqrt(f'(0))", {1, 6, 8, 9, 10},
       "f = u(1-u), one front at the linear speed 2"},
      {"bistable", "allen_cahn", json{{"a", 0.25}}, "bistable cubic, explicit speed (1-2a)/sqrt(2)",
       {2, 6, 8, 9, 10}, "f = u(1-u)(u-1/4)"},
      {"periodic-kpp", "kpp", json{{"r", {{"mean", 1.0}, {"amp", 0.2}}}},
       "monostable in a periodic medium, pulsating front", {5, 6, 8, 9},
       "f = r(x) u(1-u), r = 1 + 0.2 sin(2 pi x)"},
      {"periodic-allen-cahn", "allen_cahn", json{{"a", {{"mean", 0.5}, {"amp", 0.3}}}},
       "bistable in a periodic medium, principal eigenvalue of the linearization at 1", {7},
       "f = u(1-u)(u-a(x)), a = 0.5 + 0.3 sin(2 pi x)"},
      {"combustion", "combustion", json{{"theta_ig", 0.3}, {"k", 1.0}},
       "ignition type: the zeros below theta_ig form a continuum", {6, 8, 9},
       "f = (u-0.3)^2 (1-u) above the ignition threshold"},
      {"tristable", "tristable", json{{"theta", 0.5}, {"a1", 0.2}, {"a2", 0.4}, {"k1", 4.0}},
       "two bistable fronts with the lower one faster, travelling as a pair", {3, 6, 8, 9, 10},
       "cubics on [0, 1/2] and [1/2, 1] glued at theta = 1/2"},
      {"stacked", "stacked_kpp_bistable", json{{"theta1", 0.5}, {"b", 0.2}, {"s", 2.0}},
       "KPP below a bistable layer; the two fronts move at different speeds", {4, 6, 8, 9, 10},
       "KPP on [0, 1/2], bistable cubic on [1/2, 1]"},
  };
  return catalog;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace {

const char* const kFamilies[] = {"kpp", "allen_cahn", "combustion", "tristable", "stacked_kpp_bistable", "custom"};

std::string nearest_name(std::string_view name) {
  std::string best;
  std::size_t best_d = std::string::npos;
  auto consider = [&](std::string_view cand) {
    const std::size_t d = edit_distance(name, cand);
    if (d < best_d) {
      best_d = d;
      best = cand;
    }
  };
  for (const auto& p : preset_catalog()) consider(p.name);
  for (const char* f : kFamilies) consider(f);
  return best;
}

}  // namespace

const PresetInfo& find_preset(std::string_view name) {
  for (const auto& p : preset_catalog())
    if (p.name == name) return p;
  throw ConfigError("preset", "unknown preset `" + std::string(name) + "`; did you mean `" + nearest_name(name) + "`?");
}

ReactionModel resolve_model(const std::string& preset, const json& params) {
  for (const auto& p : preset_catalog()) {
    if (p.name != preset) continue;
    json merged = p.params;
    if (params.is_object())
      for (auto it = params.begin(); it != params.end(); ++it) merged[it.key()] = it.value();
    return make_preset(p.family, merged);
  }
  for (const char* f : kFamilies)
    if (preset == f) return make_preset(preset, params);
  find_preset(preset);  // throws with a suggestion
  throw InternalError("unreachable");
}

const std::vector<std::string>& known_observers() {
  static const std::vector<std::string> names = {"terrace",     "spreading",  "eigen",      "wavebvp",
                                                 "zeronumber", "uniqueness", "assumption1"};
  return names;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set", "expected path=value, got `" + assignment + "`");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("--set", "empty path component in `" + path + "`");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

namespace {

struct Issues {
  std::vector<std::string> fields;
  std::vector<std::string> messages;
  void add(const std::string& field, const std::string& msg) {
    fields.push_back(field);
    messages.push_back(field + ": " + msg);
  }
  bool empty() const { return fields.empty(); }
};

std::string join_path(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

/// Object at `key`, or an empty object. Non-objects are reported.
json section(const json& doc, const std::string& key, Issues& issues, const std::set<std::string>& allowed) {
  if (!doc.contains(key)) return json::object();
  const json& s = doc.at(key);
  if (!s.is_object()) {
    issues.add(key, "must be an object");
    return json::object();
  }
  for (auto it = s.begin(); it != s.end(); ++it)
    if (!allowed.count(it.key())) issues.add(join_path(key, it.key()), "unknown key");
  return s;
}

std::optional<double> number(const json& obj, const std::string& key, const std::string& path, Issues& issues) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  const json& v = obj.at(key);
  if (!v.is_number()) {
    issues.add(path, "must be a number");
    return std::nullopt;
  }
  const double d = v.get<double>();
  if (!std::isfinite(d)) {
    issues.add(path, "must be finite");
    return std::nullopt;
  }
  return d;
}

std::optional<bool> boolean(const json& obj, const std::string& key, const std::string& path, Issues& issues) {
  if (!obj.contains(key)) return std::nullopt;
  if (!obj.at(key).is_boolean()) {
    issues.add(path, "must be true or false");
    return std::nullopt;
  }
  return obj.at(key).get<bool>();
}

std::vector<double> number_list(const json& obj, const std::string& key, const std::string& path, Issues& issues) {
  std::vector<double> out;
  if (!obj.contains(key)) return out;
  const json& v = obj.at(key);
  if (!v.is_array() || v.empty()) {
    issues.add(path, "must be a non-empty array of numbers");
    return out;
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      issues.add(path + "[" + std::to_string(i) + "]", "must be a number");
      continue;
    }
    out.push_back(v[i].get<double>());
  }
  return out;
}

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

std::string stem_of(const std::string& source) {
  const std::string s = std::filesystem::path(source).stem().string();
  return s.empty() || s[0] == '<' ? "experiment" : s;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source,
                              const std::vector<std::string>& overrides) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte);
    throw ConfigError(std::vector<std::string>{"<parse>"}, source + ":" + std::to_string(line) + ":" +
                                                               std::to_string(col) + ": parse error: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("<root>", source + ": top level must be an object");
  for (const auto& o : overrides) apply_override(doc, o);

  Issues issues;
  ExperimentConfig cfg;
  cfg.source = source;

  static const std::set<std::string> top = {"name",     "description", "criterion", "model",  "roof",
                                            "domain",   "time",        "heaviside_a", "observers", "seeds",
                                            "terrace",  "output",      "output_dir", "acceptance", "derived"};
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!top.count(it.key())) issues.add(it.key(), "unknown key");

  if (doc.contains("criterion")) {
    if (doc["criterion"].is_number_integer()) cfg.criterion = doc["criterion"].get<int>();
    else issues.add("criterion", "must be an integer");
  }
  if (doc.contains("acceptance")) {
    if (doc["acceptance"].is_object()) cfg.acceptance = doc["acceptance"];
    else issues.add("acceptance", "must be an object");
  }

  // Model.
  const json model = section(doc, "model", issues, {"preset", "params", "expr", "table", "L"});
  std::optional<ReactionModel> rm;
  if (!doc.contains("model")) {
    issues.add("model", "missing");
  } else if (!model.contains("preset") || !model["preset"].is_string()) {
    issues.add("model.preset", "missing or not a string");
  } else {
    cfg.preset = model["preset"].get<std::string>();
    if (model.contains("params")) {
      if (model["params"].is_object()) cfg.params = model["params"];
      else issues.add("model.params", "must be an object");
    }
    for (const char* k : {"expr", "table", "L"})
      if (model.contains(k)) cfg.params[k] = model[k];
    try {
      rm = resolve_model(cfg.preset, cfg.params);
    } catch (const ConfigError& e) {
      const std::string f = e.fields().empty() ? "" : e.fields().front();
      issues.add(f == "preset" ? "model.preset" : "model.params." + f, e.what());
    }
  }

  if (auto r = number(doc, "roof", "roof", issues)) {
    if (*r > 0) cfg.roof = *r;
    else issues.add("roof", "must be positive");
  }

  const json time = section(doc, "time", issues, {"dt", "T_final", "record_every"});
  if (auto v = number(time, "T_final", "time.T_final", issues)) {
    if (*v > 0) cfg.T_final = *v;
    else issues.add("time.T_final", "must be positive");
  }
  if (auto v = number(time, "record_every", "time.record_every", issues)) {
    if (*v > 0) cfg.record_every = *v;
    else issues.add("time.record_every", "must be positive");
  }
  if (auto v = number(doc, "heaviside_a", "heaviside_a", issues)) cfg.heaviside_a = *v;

  const json seeds = section(doc, "seeds", issues, {"x0_list", "a_list", "alpha_policy"});
  if (auto xs = number_list(seeds, "x0_list", "seeds.x0_list", issues); !xs.empty()) cfg.x0_list = xs;
  cfg.a_list = number_list(seeds, "a_list", "seeds.a_list", issues);
  if (cfg.a_list.empty()) cfg.a_list = {cfg.heaviside_a};
  if (seeds.contains("alpha_policy")) {
    const json& ap = seeds["alpha_policy"];
    if (!ap.is_object()) {
      issues.add("seeds.alpha_policy", "must be an object");
    } else {
      for (auto it = ap.begin(); it != ap.end(); ++it)
        if (it.key() != "gamma" && it.key() != "retries") issues.add("seeds.alpha_policy." + it.key(), "unknown key");
      if (auto g = number(ap, "gamma", "seeds.alpha_policy.gamma", issues)) {
        if (*g > 0 && *g < 1) cfg.gamma = *g;
        else issues.add("seeds.alpha_policy.gamma", "must lie in (0,1)");
      }
      if (auto r = number(ap, "retries", "seeds.alpha_policy.retries", issues)) {
        if (*r >= 0 && *r == std::floor(*r)) cfg.gamma_retries = static_cast<int>(*r);
        else issues.add("seeds.alpha_policy.retries", "must be a non-negative integer");
      }
    }
  }
  const double x0_min = *std::min_element(cfg.x0_list.begin(), cfg.x0_list.end());
  for (double a : cfg.a_list)
    if (!(a < x0_min)) issues.add("seeds.a_list", "every interface must lie left of every x0");
  if (!(cfg.heaviside_a < x0_min)) issues.add("heaviside_a", "must lie left of every x0");

  const json terrace = section(doc, "terrace", issues, {"delta", "verify_steepness", "check_isolation", "n_max"});
  if (auto v = number(terrace, "delta", "terrace.delta", issues)) {
    if (*v > 0) cfg.delta = *v;
    else issues.add("terrace.delta", "must be positive");
  }
  if (auto v = boolean(terrace, "verify_steepness", "terrace.verify_steepness", issues)) cfg.verify_steepness = *v;
  if (auto v = boolean(terrace, "check_isolation", "terrace.check_isolation", issues)) cfg.check_isolation = *v;
  if (auto v = number(terrace, "n_max", "terrace.n_max", issues)) {
    if (*v >= 1 && *v == std::floor(*v)) cfg.n_max = static_cast<int>(*v);
    else issues.add("terrace.n_max", "must be a positive integer");
  }

  if (doc.contains("observers")) {
    const json& obs = doc["observers"];
    if (!obs.is_array()) {
      issues.add("observers", "must be an array of names");
    } else {
      for (const auto& o : obs) {
        if (!o.is_string()) {
          issues.add("observers", "entries must be strings");
          continue;
        }
        const auto name = o.get<std::string>();
        const auto& known = known_observers();
        if (std::find(known.begin(), known.end(), name) == known.end()) {
          std::string best;
          std::size_t bd = std::string::npos;
          for (const auto& k : known)
            if (edit_distance(name, k) < bd) bd = edit_distance(name, k), best = k;
          issues.add("observers", "unknown observer `" + name + "`; did you mean `" + best + "`?");
        } else if (std::find(cfg.observers.begin(), cfg.observers.end(), name) == cfg.observers.end()) {
          cfg.observers.push_back(name);
        }
      }
    }
  } else {
    cfg.observers = {"terrace", "spreading", "eigen", "wavebvp", "zeronumber"};
  }

  const json output = section(doc, "output", issues, {"snapshot_every", "snapshot_stride"});
  cfg.snapshot_every = cfg.T_final / 20.0;
  if (auto v = number(output, "snapshot_every", "output.snapshot_every", issues)) {
    if (*v >= 0) cfg.snapshot_every = *v;
    else issues.add("output.snapshot_every", "must be non-negative (0 disables snapshots)");
  }
  if (auto v = number(output, "snapshot_stride", "output.snapshot_stride", issues)) {
    if (*v >= 1 && *v == std::floor(*v)) cfg.snapshot_stride = static_cast<int>(*v);
    else issues.add("output.snapshot_stride", "must be a positive integer");
  }
  if (doc.contains("output_dir")) {
    if (doc["output_dir"].is_string() && !doc["output_dir"].get<std::string>().empty())
      cfg.output_dir = doc["output_dir"].get<std::string>();
    else issues.add("output_dir", "must be a non-empty string");
  } else {
    cfg.output_dir = "out/" + stem_of(source);
  }

  // Domain and time step depend on the model.
  const json domain = section(doc, "domain", issues, {"x_left", "x_right", "dx"});
  if (rm) {
    const double L = rm->period();
    double dx = L / 64.0;
    if (auto v = number(domain, "dx", "domain.dx", issues)) {
      const double ratio = L / *v;
      if (!(*v > 0)) issues.add("domain.dx", "must be positive");
      else if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
        issues.add("domain.dx", "must divide the period L = " + fmt_num(L) + " (L/dx = " + fmt_num(ratio) + ")");
      else dx = L / std::round(ratio);
    }
    cfg.domain.dx = dx;
    const double K = rm->lipschitz();
    const double a = std::min(cfg.heaviside_a, *std::min_element(cfg.a_list.begin(), cfg.a_list.end()));
    const double a_hi = std::max(cfg.heaviside_a, *std::max_element(cfg.a_list.begin(), cfg.a_list.end()));
    cfg.domain.x_left = std::floor((a - 20 * L) / L) * L;
    cfg.domain.x_right = std::ceil((a_hi + 2 * std::sqrt(K) * cfg.T_final + 20 * L) / L) * L;
    if (auto v = number(domain, "x_left", "domain.x_left", issues)) cfg.domain.x_left = *v;
    if (auto v = number(domain, "x_right", "domain.x_right", issues)) cfg.domain.x_right = *v;
    if (!(cfg.domain.x_right > cfg.domain.x_left)) {
      issues.add("domain", "x_right must exceed x_left");
    } else {
      if (a - cfg.domain.x_left < 10 * L)
        issues.add("domain.x_left", "needs at least 10 periods left of the interface (x_left <= " +
                                        fmt_num(a - 10 * L) + ")");
      if (cfg.domain.x_right - a_hi < 10 * L)
        issues.add("domain.x_right", "needs at least 10 periods right of the interface (x_right >= " +
                                         fmt_num(a_hi + 10 * L) + ")");
      if (cfg.domain.x_right - 10 * L - *std::max_element(cfg.x0_list.begin(), cfg.x0_list.end()) < 20 * L)
        issues.add("domain.x_right", "leaves fewer than 20 observation points x0 + kL");
    }
    const double dt_max = max_monotone_dt(*rm, 0.0, cfg.roof);
    cfg.dt = default_dt(*rm, cfg.roof);
    if (auto v = number(time, "dt", "time.dt", issues)) {
      if (!(*v > 0)) issues.add("time.dt", "must be positive");
      else if (*v > dt_max)
        issues.add("time.dt", "violates the monotonicity constraint dt * max|f_u| <= 1; admissible max is " +
                                  fmt_num(dt_max));
      else cfg.dt = *v;
    }
  }

  if (!issues.empty()) {
    std::string msg = source + ": " + std::to_string(issues.fields.size()) + " configuration error(s)";
    for (const auto& m : issues.messages) msg += "\n  " + m;
    throw ConfigError(issues.fields, msg);
  }

  json& r = cfg.resolved;
  if (doc.contains("name")) r["name"] = doc["name"];
  if (cfg.criterion) r["criterion"] = cfg.criterion;
  r["model"] = {{"preset", cfg.preset}, {"params", rm->params()}};
  r["derived"] = {{"L", rm->period()}, {"K", rm->lipschitz()}, {"dt_max", max_monotone_dt(*rm, 0.0, cfg.roof)}};
  r["roof"] = cfg.roof;
  r["domain"] = {{"x_left", cfg.domain.x_left}, {"x_right", cfg.domain.x_right}, {"dx", cfg.domain.dx}};
  r["time"] = {{"dt", cfg.dt}, {"T_final", cfg.T_final}, {"record_every", cfg.record_every}};
  r["heaviside_a"] = cfg.heaviside_a;
  r["observers"] = cfg.observers;
  r["seeds"] = {{"x0_list", cfg.x0_list},
                {"a_list", cfg.a_list},
                {"alpha_policy", {{"gamma", cfg.gamma}, {"retries", cfg.gamma_retries}}}};
  r["terrace"] = {{"delta", cfg.delta},
                  {"verify_steepness", cfg.verify_steepness},
                  {"check_isolation", cfg.check_isolation},
                  {"n_max", cfg.n_max}};
  r["output"] = {{"snapshot_every", cfg.snapshot_every}, {"snapshot_stride", cfg.snapshot_stride}};
  r["output_dir"] = cfg.output_dir;
  if (!cfg.acceptance.empty()) r["acceptance"] = cfg.acceptance;
  return cfg;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides, bool echo) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(std::vector<std::string>{"<file>"}, path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig cfg = parse_config(ss.str(), path, overrides);
  if (const char* env = std::getenv("TERRACE_LAB_OUT"); env && *env) {
    cfg.output_dir = env;
    cfg.resolved["output_dir"] = cfg.output_dir;
  }
  if (echo) {
    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream out(std::filesystem::path(cfg.output_dir) / "config.resolved.json", std::ios::binary);
    out << cfg.resolved.dump(2) << '\n';
  }
  return cfg;
}

}  // namespace tlab
