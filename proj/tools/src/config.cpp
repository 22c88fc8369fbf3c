// SPDX-License-Identifier: Apache-2.0
// JSON config schema: every object is checked against its allowed keys
// before any field is read.
#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <string>

#include "reflectsim/cli.hpp"
#include "reflectsim/error.hpp"

namespace reflectsim::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError("config " + path + ": " + what);
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) {
    fail(path, "expected an object");
  }
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
      fail(path, "unknown key '" + key + "'");
    }
  }
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) {
    fail(path, "expected a number");
  }
  const double v = j.get<double>();
  if (!std::isfinite(v)) {
    fail(path, "expected a finite number");
  }
  return v;
}

double number_or(const json& parent, const char* key, const std::string& path, double fallback) {
  return parent.contains(key) ? number(parent.at(key), join(path, key)) : fallback;
}

std::uint64_t unsigned_integer(const json& j, const std::string& path) {
  const bool ok = j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
  if (!ok) {
    fail(path, "expected a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

const json& required(const json& parent, const char* key, const std::string& path) {
  if (!parent.contains(key)) {
    fail(join(path, key), "missing");
  }
  return parent.at(key);
}

std::vector<double> number_list(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) {
    fail(path, "expected a nonempty array of numbers");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<int> index_list(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) {
    fail(path, "expected a nonempty array of integers");
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto v = unsigned_integer(j[i], path + "[" + std::to_string(i) + "]");
    if (v < 1 || v > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) {
      fail(path, "n must lie in [1, 2^31)");
    }
    out.push_back(static_cast<int>(v));
  }
  return out;
}

// A coefficient is a number (constant) or {"polynomial": [c0, c1, ...]}.
std::function<double(double)> coefficient(const json& j, const std::string& path,
                                          std::optional<double>& constant) {
  if (j.is_number()) {
    const double v = number(j, path);
    constant = v;
    return [v](double) { return v; };
  }
  allow_keys(j, path, {"polynomial"});
  const auto coefs = number_list(required(j, "polynomial", path), join(path, "polynomial"));
  if (coefs.size() == 1) {
    constant = coefs[0];
  }
  return [coefs](double x) {
    double acc = 0.0;
    for (auto it = coefs.rbegin(); it != coefs.rend(); ++it) {
      acc = acc * x + *it;
    }
    return acc;
  };
}

DiffusionSpec parse_spec(const json& j, const std::string& path) {
  allow_keys(j, path, {"drift", "diffusion", "z0"});
  DiffusionSpec spec = DiffusionSpec::brownian(number(required(j, "z0", path), join(path, "z0")));
  if (j.contains("drift")) {
    spec.constant_drift.reset();
    spec.drift = coefficient(j.at("drift"), join(path, "drift"), spec.constant_drift);
  }
  if (j.contains("diffusion")) {
    spec.constant_diffusion.reset();
    spec.diffusion = coefficient(j.at("diffusion"), join(path, "diffusion"), spec.constant_diffusion);
  }
  if (spec.z0 < 0.0) {
    fail(join(path, "z0"), "must be >= 0");
  }
  return spec;
}

// A schedule is a number (constant) or {"kind": ..., "coef": ..., "exponent"|"base": ...}.
Schedule parse_schedule(const json& j, const std::string& path) {
  if (j.is_number()) {
    return Schedule::constant(number(j, path));
  }
  allow_keys(j, path, {"kind", "coef", "exponent", "base"});
  const json& kind = required(j, "kind", path);
  if (!kind.is_string()) {
    fail(join(path, "kind"), "expected a string");
  }
  const auto name = kind.get<std::string>();
  const double coef = number_or(j, "coef", path, 1.0);
  auto param = [&](const char* key, const char* other) {
    if (j.contains(other)) {
      fail(join(path, other), "not used by kind '" + name + "'");
    }
    return number(required(j, key, path), join(path, key));
  };
  if (name == "power") {
    return Schedule::power(coef, param("exponent", "base"));
  }
  if (name == "geometric") {
    return Schedule::geometric(coef, param("base", "exponent"));
  }
  if (name == "power_of_a") {
    return Schedule::power_of_a(coef, param("exponent", "base"));
  }
  if (name == "constant") {
    if (j.contains("exponent") || j.contains("base")) {
      fail(path, "constant schedule takes only 'coef'");
    }
    return Schedule::constant(coef);
  }
  fail(join(path, "kind"), "unknown schedule kind '" + name + "'");
}

Profile parse_profile(const json& j, const std::string& path) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "indicator_left") return Profile::indicator_left();
    if (name == "indicator_right") return Profile::indicator_right();
    if (name == "exp_left") return Profile::exp_left();
    if (name == "exp_two_sided") return Profile::exp_two_sided();
    if (name == "zero") return Profile::zero();
    fail(path, "unknown profile '" + name + "'");
  }
  allow_keys(j, path, {"x", "y"});
  return Profile::tabulated(number_list(required(j, "x", path), join(path, "x")),
                            number_list(required(j, "y", path), join(path, "y")));
}

PenaltyFamily parse_family(const json& j, const std::string& path, const DiffusionSpec& spec) {
  allow_keys(j, path, {"kind", "a", "c", "profile"});
  const json& kind = required(j, "kind", path);
  if (!kind.is_string()) {
    fail(join(path, "kind"), "expected a string");
  }
  const auto name = kind.get<std::string>();
  FamilyKind fk;
  if (name == "wall_left") {
    fk = FamilyKind::wall_left;
  } else if (name == "wall_right") {
    fk = FamilyKind::wall_right;
  } else if (name == "scaled_profile") {
    fk = FamilyKind::scaled_profile;
  } else {
    fail(join(path, "kind"), "unknown family kind '" + name + "'");
  }
  std::optional<Profile> profile;
  if (j.contains("profile")) {
    if (fk != FamilyKind::scaled_profile) {
      fail(join(path, "profile"), "only used by scaled_profile");
    }
    profile = parse_profile(j.at("profile"), join(path, "profile"));
  } else if (fk == FamilyKind::scaled_profile) {
    fail(join(path, "profile"), "missing");
  }
  return PenaltyFamily::for_target(fk, parse_schedule(required(j, "a", path), join(path, "a")),
                                   parse_schedule(required(j, "c", path), join(path, "c")), spec,
                                   std::move(profile));
}

SimulationConfig parse_simulation(const json& j, const std::string& path, std::uint64_t seed) {
  allow_keys(j, path, {"horizon", "step", "num_paths", "refine_band", "refine_factor"});
  SimulationConfig cfg;
  cfg.seed = seed;
  cfg.horizon = number_or(j, "horizon", path, cfg.horizon);
  cfg.step = number(required(j, "step", path), join(path, "step"));
  cfg.num_paths = unsigned_integer(required(j, "num_paths", path), join(path, "num_paths"));
  cfg.refine_band = number_or(j, "refine_band", path, 0.0);
  if (j.contains("refine_factor")) {
    cfg.refine_factor = unsigned_integer(j.at("refine_factor"), join(path, "refine_factor"));
  }
  cfg.validate();
  return cfg;
}

ScaleConfig parse_scale_config(const json& j, const std::string& path) {
  allow_keys(j, path, {"reference_point", "lower_limit", "quad_rel_tol", "quad_max_depth"});
  ScaleConfig cfg;
  cfg.reference_point = number_or(j, "reference_point", path, cfg.reference_point);
  cfg.lower_limit = number_or(j, "lower_limit", path, cfg.lower_limit);
  cfg.quad_rel_tol = number_or(j, "quad_rel_tol", path, cfg.quad_rel_tol);
  if (j.contains("quad_max_depth")) {
    const auto depth = unsigned_integer(j.at("quad_max_depth"), join(path, "quad_max_depth"));
    if (depth > 200) {
      fail(join(path, "quad_max_depth"), "must be <= 200");
    }
    cfg.quad_max_depth = static_cast<unsigned>(depth);
  }
  cfg.validate();
  return cfg;
}

ProbePlan parse_probes(const json& j, const std::string& path) {
  allow_keys(j, path,
             {"compact_intervals", "sigma_probe_max", "grid_points", "equicontinuity_radii",
              "layer_delta", "drift_slack", "sup_tolerance"});
  ProbePlan plan;
  if (j.contains("compact_intervals")) {
    const json& list = j.at("compact_intervals");
    const auto p = join(path, "compact_intervals");
    if (!list.is_array() || list.empty()) {
      fail(p, "expected a nonempty array of [x1, x2] pairs");
    }
    plan.compact_intervals.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto pair = number_list(list[i], p + "[" + std::to_string(i) + "]");
      if (pair.size() != 2) {
        fail(p, "each interval needs exactly two numbers");
      }
      plan.compact_intervals.emplace_back(pair[0], pair[1]);
    }
  }
  plan.sigma_probe_max = number_or(j, "sigma_probe_max", path, plan.sigma_probe_max);
  if (j.contains("grid_points")) {
    plan.grid_points = unsigned_integer(j.at("grid_points"), join(path, "grid_points"));
  }
  if (j.contains("equicontinuity_radii")) {
    plan.equicontinuity_radii =
        number_list(j.at("equicontinuity_radii"), join(path, "equicontinuity_radii"));
  }
  plan.layer_delta = number_or(j, "layer_delta", path, plan.layer_delta);
  if (j.contains("drift_slack")) {
    plan.drift_slack = number_list(j.at("drift_slack"), join(path, "drift_slack"));
  }
  plan.sup_tolerance = number_or(j, "sup_tolerance", path, plan.sup_tolerance);
  return plan;
}

int member_index(const json& doc) {
  if (!doc.contains("n")) {
    return 1;
  }
  return index_list(json::array({doc.at("n")}), "n").front();
}

}  // namespace

RunConfig parse_run_config(const json& doc, std::optional<std::uint64_t> seed_override) {
  if (!doc.is_object()) {
    fail("", "top level must be an object");
  }
  const json& command = required(doc, "command", "");
  if (!command.is_string()) {
    fail("command", "expected a string");
  }
  RunConfig rc;
  rc.command = command.get<std::string>();
  if (doc.contains("seed")) {
    rc.seed = unsigned_integer(doc.at("seed"), "seed");
  }
  if (seed_override) {
    rc.seed = *seed_override;
  }
  if (doc.contains("output")) {
    if (!doc.at("output").is_string()) {
      fail("output", "expected a string");
    }
    rc.output = doc.at("output").get<std::string>();
  }

  const std::string& c = rc.command;
  if (c == "simulate") {
    allow_keys(doc, "", {"command", "seed", "output", "spec", "simulation", "family", "n"});
    SimulateCommand cmd;
    cmd.spec = parse_spec(required(doc, "spec", ""), "spec");
    cmd.simulation = parse_simulation(required(doc, "simulation", ""), "simulation", rc.seed);
    if (doc.contains("family")) {
      cmd.family = parse_family(doc.at("family"), "family", cmd.spec);
      cmd.n = member_index(doc);
    } else if (doc.contains("n")) {
      fail("n", "only used together with 'family'");
    }
    rc.payload = std::move(cmd);
  } else if (c == "scale") {
    allow_keys(doc, "", {"command", "seed", "output", "spec", "family", "n", "points", "scale"});
    ScaleCommand cmd;
    const DiffusionSpec spec = parse_spec(required(doc, "spec", ""), "spec");
    if (doc.contains("family")) {
      cmd.coeffs = member(parse_family(doc.at("family"), "family", spec), member_index(doc)).coeffs;
    } else if (doc.contains("n")) {
      fail("n", "only used together with 'family'");
    } else {
      cmd.coeffs = spec.coefficients();
    }
    cmd.points = number_list(required(doc, "points", ""), "points");
    if (doc.contains("scale")) {
      cmd.scale = parse_scale_config(doc.at("scale"), "scale");
    }
    rc.payload = std::move(cmd);
  } else if (c == "check") {
    allow_keys(doc, "", {"command", "seed", "output", "spec", "family", "n_list", "probes"});
    CheckCommand cmd;
    cmd.spec = parse_spec(required(doc, "spec", ""), "spec");
    cmd.family = parse_family(required(doc, "family", ""), "family", cmd.spec);
    cmd.n_list = index_list(required(doc, "n_list", ""), "n_list");
    if (doc.contains("probes")) {
      cmd.probes = parse_probes(doc.at("probes"), "probes");
    }
    rc.payload = std::move(cmd);
  } else if (c == "study") {
    allow_keys(doc, "",
               {"command", "seed", "output", "spec", "family", "n_list", "epsilon", "simulation",
                "target"});
    StudyCommand cmd;
    cmd.spec = parse_spec(required(doc, "spec", ""), "spec");
    cmd.family = parse_family(required(doc, "family", ""), "family", cmd.spec);
    cmd.n_list = index_list(required(doc, "n_list", ""), "n_list");
    cmd.epsilon = number_or(doc, "epsilon", "", cmd.epsilon);
    cmd.simulation = parse_simulation(required(doc, "simulation", ""), "simulation", rc.seed);
    if (doc.contains("target")) {
      const json& t = doc.at("target");
      if (!t.is_string() || (t != "rbm" && t != "reflected")) {
        fail("target", "expected \"rbm\" or \"reflected\"");
      }
      cmd.target = t.get<std::string>();
    }
    if (cmd.target == "rbm" && !(cmd.spec.constant_drift == 0.0 && cmd.spec.constant_diffusion == 1.0)) {
      fail("target", "\"rbm\" needs drift 0 and diffusion 1");
    }
    rc.payload = std::move(cmd);
  } else if (c == "skew") {
    allow_keys(doc, "", {"command", "seed", "output", "k", "a", "simulation"});
    SkewCommand cmd;
    const json& k = required(doc, "k", "");
    cmd.k = k.is_array() ? number_list(k, "k") : std::vector<double>{number(k, "k")};
    cmd.a = number_or(doc, "a", "", cmd.a);
    cmd.simulation = parse_simulation(required(doc, "simulation", ""), "simulation", rc.seed);
    rc.payload = std::move(cmd);
  } else if (c == "modulus") {
    allow_keys(doc, "", {"command", "seed", "output", "spec", "simulation", "query"});
    ModulusCommand cmd;
    // The modulus study runs an unreflected SDE, so z0 may be any real.
    const json& spec_doc = required(doc, "spec", "");
    allow_keys(spec_doc, "spec", {"drift", "diffusion", "z0"});
    cmd.z0 = number_or(spec_doc, "z0", "spec", 0.0);
    cmd.coeffs = CoefficientPair::constant(0.0, 1.0);
    if (spec_doc.contains("drift")) {
      std::optional<double> ignored;
      cmd.coeffs.drift = coefficient(spec_doc.at("drift"), "spec.drift", ignored);
    }
    if (spec_doc.contains("diffusion")) {
      cmd.coeffs.constant_diffusion.reset();
      cmd.coeffs.diffusion =
          coefficient(spec_doc.at("diffusion"), "spec.diffusion", cmd.coeffs.constant_diffusion);
    }
    cmd.simulation = parse_simulation(required(doc, "simulation", ""), "simulation", rc.seed);
    const json& q = required(doc, "query", "");
    allow_keys(q, "query", {"delta", "D", "alpha", "beta", "K"});
    cmd.query.delta = number(required(q, "delta", "query"), "query.delta");
    cmd.query.distance = number(required(q, "D", "query"), "query.D");
    cmd.query.alpha = number(required(q, "alpha", "query"), "query.alpha");
    cmd.query.beta = number(required(q, "beta", "query"), "query.beta");
    cmd.query.diffusion_bound = number(required(q, "K", "query"), "query.K");
    cmd.query.horizon = cmd.simulation.horizon;
    cmd.query.validate();
    rc.payload = std::move(cmd);
  } else {
    fail("command", "unknown command '" + c + "'");
  }
  return rc;
}

}  // namespace reflectsim::cli
