#pragma once

// Experiment configuration: a JSON document with a fixed key set.
//
//   {
//     "model": {"kind": "torus", "domain": [0.02, 0.5], "truncation": 4},
//     "theta_star": [0.1],
//     "M_list": [10, 50], "N_list": [20, 200],
//     "replicates": 50,
//     "seed": 2024,
//     "theta_grid": {"lo": 0.02, "hi": 0.5, "count": 61},
//     "optimizer": {"grid_points": 61, "refine_tol": 1e-6, "max_refine_iters": 200},
//     "outputs": {"directory": "out", "formats": ["csv", "svg"]}
//   }
//
// Discrete models take "mu", "nu" and a single "features" table (nx rows of
// ny values), or "preset": "3x3" / "2x2". "theta_grid" may also be given as an
// explicit list of points. Any key not listed here is rejected.

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "bbs/core.hpp"
#include "bbs/models.hpp"
#include "bbs/optimize.hpp"
#include "bbs/rng.hpp"

namespace bbs::experiments {

using Json = nlohmann::json;

struct ModelSpec {
  std::string kind = "torus";
  std::optional<std::vector<double>> domain;
  int truncation = 4;
  std::string preset;
  std::vector<double> mu;
  std::vector<double> nu;
  std::vector<std::vector<double>> features;
};

struct ThetaGrid {
  std::vector<double> points;
};

struct OutputSpec {
  std::string directory = "out";
  std::vector<std::string> formats{"csv"};

  bool wants(const std::string& f) const {
    for (const auto& s : formats) {
      if (s == f) return true;
    }
    return false;
  }
};

struct ExperimentConfig {
  ModelSpec model;
  std::vector<double> theta_star;
  std::vector<std::size_t> M_list;
  std::vector<std::size_t> N_list;
  std::size_t replicates = 1;
  SeedSpec seed{0};
  std::optional<ThetaGrid> theta_grid;
  MinimizeOptions optimizer;
  OutputSpec outputs;
};

using AnyModel = std::variant<TorusWrappedGaussianModel, BivariateNormalRatioModel, DiscreteTabularModel>;

namespace detail {

[[noreturn]] inline void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

inline void require_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.contains(key)) config_error("unknown key '" + key + "' in " + where);
  }
}

inline double get_number(const Json& v, const std::string& what) {
  if (!v.is_number()) config_error(what + " must be a number");
  return v.get<double>();
}

inline std::uint64_t get_count(const Json& v, const std::string& what) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    config_error(what + " must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

inline std::vector<double> get_numbers(const Json& v, const std::string& what) {
  if (!v.is_array()) config_error(what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(get_number(e, what));
  return out;
}

inline std::vector<std::size_t> get_sizes(const Json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) config_error(what + " must be a non-empty array of positive integers");
  std::vector<std::size_t> out;
  for (const auto& e : v) {
    const auto n = get_count(e, what);
    if (n == 0) config_error(what + " entries must be positive");
    out.push_back(static_cast<std::size_t>(n));
  }
  return out;
}

inline ModelSpec parse_model(const Json& j) {
  require_keys(j, "model", {"kind", "domain", "truncation", "preset", "mu", "nu", "features"});
  ModelSpec m;
  if (!j.contains("kind") || !j["kind"].is_string()) config_error("model.kind must be a string");
  m.kind = j["kind"].get<std::string>();
  if (m.kind != "torus" && m.kind != "bivariate" && m.kind != "discrete") {
    config_error("model.kind must be torus, bivariate or discrete");
  }
  if (j.contains("domain")) {
    m.domain = get_numbers(j["domain"], "model.domain");
    if (m.domain->size() != 2) config_error("model.domain must be [lo, hi]");
  }
  if (j.contains("truncation")) {
    if (m.kind != "torus") config_error("model.truncation only applies to the torus model");
    m.truncation = static_cast<int>(get_count(j["truncation"], "model.truncation"));
  }
  const bool has_tables = j.contains("mu") || j.contains("nu") || j.contains("features");
  if ((j.contains("preset") || has_tables) && m.kind != "discrete") {
    config_error("preset/mu/nu/features only apply to the discrete model");
  }
  if (j.contains("preset")) {
    if (!j["preset"].is_string()) config_error("model.preset must be a string");
    m.preset = j["preset"].get<std::string>();
    if (m.preset != "3x3" && m.preset != "2x2") config_error("model.preset must be 3x3 or 2x2");
    if (has_tables) config_error("model.preset excludes mu/nu/features");
  }
  if (has_tables) {
    if (!j.contains("mu") || !j.contains("nu") || !j.contains("features")) {
      config_error("discrete model needs mu, nu and features together");
    }
    m.mu = get_numbers(j["mu"], "model.mu");
    m.nu = get_numbers(j["nu"], "model.nu");
    if (!j["features"].is_array()) config_error("model.features must be a table");
    for (const auto& row : j["features"]) m.features.push_back(get_numbers(row, "model.features"));
  }
  if (m.kind == "discrete" && m.preset.empty() && !has_tables) m.preset = "3x3";
  return m;
}

inline ThetaGrid parse_theta_grid(const Json& j) {
  ThetaGrid g;
  if (j.is_array()) {
    g.points = get_numbers(j, "theta_grid");
    if (g.points.empty()) config_error("theta_grid must not be empty");
    return g;
  }
  require_keys(j, "theta_grid", {"lo", "hi", "count"});
  if (!j.contains("lo") || !j.contains("hi") || !j.contains("count")) config_error("theta_grid needs lo, hi, count");
  const double lo = get_number(j["lo"], "theta_grid.lo");
  const double hi = get_number(j["hi"], "theta_grid.hi");
  const auto n = get_count(j["count"], "theta_grid.count");
  if (!(lo < hi) || n < 2) config_error("theta_grid must have lo < hi and count >= 2");
  // Written as a weighted mean of the endpoints so a symmetric grid hits 0 exactly.
  // Endpoints are copied so rounding cannot push them outside the domain.
  g.points.push_back(lo);
  for (std::uint64_t i = 1; i + 1 < n; ++i) {
    g.points.push_back((lo * static_cast<double>(n - 1 - i) + hi * static_cast<double>(i)) / static_cast<double>(n - 1));
  }
  g.points.push_back(hi);
  return g;
}

}  // namespace detail

/// Builds the model for one true parameter value.
inline AnyModel make_model(const ModelSpec& spec, double theta_star) {
  auto dom = [&](double lo, double hi) {
    return spec.domain ? ParamDomain::interval((*spec.domain)[0], (*spec.domain)[1]) : ParamDomain::interval(lo, hi);
  };
  if (spec.kind == "torus") return TorusWrappedGaussianModel(theta_star, dom(0.02, 0.5), spec.truncation);
  if (spec.kind == "bivariate") return BivariateNormalRatioModel(theta_star, dom(-0.95, 0.95));
  if (spec.preset == "3x3") {
    auto m = default_discrete_model_3x3();
    return DiscreteTabularModel(m.mu(), m.nu(), m.features(), dom(-2.0, 2.0), ParamPoint{theta_star});
  }
  if (spec.preset == "2x2") {
    auto m = default_discrete_model_2x2();
    return DiscreteTabularModel(m.mu(), m.nu(), m.features(), dom(-2.0, 2.0), ParamPoint{theta_star});
  }
  std::vector<double> flat;
  for (const auto& row : spec.features) {
    if (row.size() != spec.nu.size()) throw Error(ErrorCode::ConfigError, "features rows must have ny entries");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  if (spec.features.size() != spec.mu.size()) throw Error(ErrorCode::ConfigError, "features must have nx rows");
  return DiscreteTabularModel(spec.mu, spec.nu, {flat}, dom(-2.0, 2.0), ParamPoint{theta_star});
}

inline const ParamDomain& model_domain(const AnyModel& m) {
  return std::visit([](const auto& x) -> const ParamDomain& { return x.domain(); }, m);
}

/// Parses and validates a configuration document.
inline ExperimentConfig parse_config(const Json& j) {
  using namespace detail;
  require_keys(j, "config",
               {"model", "theta_star", "M_list", "N_list", "replicates", "seed", "theta_grid", "optimizer", "outputs"});
  ExperimentConfig c;
  if (!j.contains("model")) config_error("config needs a model block");
  c.model = parse_model(j["model"]);
  if (!j.contains("theta_star")) config_error("config needs theta_star");
  c.theta_star = j["theta_star"].is_number() ? std::vector<double>{get_number(j["theta_star"], "theta_star")}
                                              : get_numbers(j["theta_star"], "theta_star");
  if (c.theta_star.empty()) config_error("theta_star must not be empty");
  c.M_list = j.contains("M_list") ? get_sizes(j["M_list"], "M_list") : std::vector<std::size_t>{10};
  c.N_list = j.contains("N_list") ? get_sizes(j["N_list"], "N_list") : std::vector<std::size_t>{20};
  if (j.contains("replicates")) c.replicates = static_cast<std::size_t>(get_count(j["replicates"], "replicates"));
  if (c.replicates < 1) config_error("replicates must be at least 1");
  if (j.contains("seed")) c.seed = SeedSpec{get_count(j["seed"], "seed")};
  if (j.contains("theta_grid")) c.theta_grid = parse_theta_grid(j["theta_grid"]);
  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    require_keys(o, "optimizer", {"grid_points", "refine_tol", "max_refine_iters"});
    if (o.contains("grid_points")) c.optimizer.grid_points = static_cast<int>(get_count(o["grid_points"], "grid_points"));
    if (o.contains("refine_tol")) c.optimizer.refine_tol = get_number(o["refine_tol"], "refine_tol");
    if (o.contains("max_refine_iters")) {
      c.optimizer.max_refine_iters = static_cast<int>(get_count(o["max_refine_iters"], "max_refine_iters"));
    }
  }
  c.optimizer.validate();
  if (j.contains("outputs")) {
    const auto& o = j["outputs"];
    require_keys(o, "outputs", {"directory", "formats"});
    if (o.contains("directory")) {
      if (!o["directory"].is_string()) config_error("outputs.directory must be a string");
      c.outputs.directory = o["directory"].get<std::string>();
    }
    if (o.contains("formats")) {
      if (!o["formats"].is_array()) config_error("outputs.formats must be an array");
      c.outputs.formats.clear();
      for (const auto& f : o["formats"]) {
        if (!f.is_string() || (f != "csv" && f != "svg")) config_error("outputs.formats entries must be csv or svg");
        c.outputs.formats.push_back(f.get<std::string>());
      }
    }
  }

  // Every referenced parameter must lie in the model's domain; building the
  // models checks theta_star.
  for (double t : c.theta_star) {
    try {
      const AnyModel m = make_model(c.model, t);
      if (c.theta_grid) {
        for (double p : c.theta_grid->points) {
          if (!model_domain(m).contains(ParamPoint{p})) config_error("theta_grid point outside the model domain");
        }
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ConfigError) throw;
      config_error(std::string("invalid model: ") + e.what());
    }
  }
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingInput, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace bbs::experiments
