// SPDX-License-Identifier: Apache-2.0
#include "reflectsim/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <system_error>

#include "CLI11.hpp"
#include "reflectsim/error.hpp"

namespace reflectsim::cli {

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (const char ch : s) {
    out += ch;
    if (ch == '"') {
      out += '"';
    }
  }
  return out + "\"";
}

std::string evidence_text(const std::vector<Evidence>& evidence) {
  std::string out;
  for (const auto& e : evidence) {
    if (!out.empty()) {
      out += " | ";
    }
    out += e.label + ":";
    for (std::size_t i = 0; i < e.values.size(); ++i) {
      out += (i ? ";" : "") + format_number(e.values[i]);
    }
  }
  return out;
}

std::string join_numbers(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out += (i ? ";" : "") + format_number(v[i]);
  }
  return out;
}

Report run_simulate(const SimulateCommand& cmd, std::size_t threads) {
  const SimulationConfig& cfg = cmd.simulation;
  const std::size_t steps = cfg.num_steps();
  std::vector<std::string> blocks(cfg.num_paths);
  std::optional<PenaltyMember> m;
  if (cmd.family) {
    m = member(*cmd.family, cmd.n);
  } else {
    validate_spec(cmd.spec);
  }
  parallel_for(cfg.num_paths, threads, [&](std::size_t p) {
    const NoiseStream noise = generate_noise(cfg.seed, p, cfg);
    std::vector<double> x(steps + 1);
    std::vector<double> l(steps + 1, 0.0);
    if (m) {
      simulate_sde_into(m->coeffs, m->start, cfg, noise, x);
    } else {
      std::vector<double> dl(steps);
      simulate_reflected_into(cmd.spec, cfg, noise, x, l, dl);
    }
    std::string& out = blocks[p];
    const std::string prefix = std::to_string(p) + ",";
    for (std::size_t k = 0; k <= steps; ++k) {
      out += prefix + std::to_string(k) + "," +
             format_number(static_cast<double>(k) * cfg.step) + "," + format_number(x[k]) + "," +
             format_number(l[k]) + "\n";
    }
  });
  Report r;
  r.csv = "path,k,t,x,l\n";
  for (const auto& b : blocks) {
    r.csv += b;
  }
  return r;
}

Report run_scale(const ScaleCommand& cmd) {
  Report r;
  r.csv = "x,s_value,s_log_abs,s_sign\n";
  for (const double x : cmd.points) {
    const ScaleResult s = scale_function(cmd.coeffs, x, cmd.scale);
    r.csv += format_number(x) + "," + format_number(s.value) + "," + format_number(s.log_abs_value) +
             "," + std::to_string(s.sign) + "\n";
  }
  return r;
}

Report run_check(const CheckCommand& cmd) {
  const ConditionReport report = check_theorem1_conditions(cmd.family, cmd.spec, cmd.n_list, cmd.probes);
  Report r;
  r.csv = "condition,verdict,evidence\n";
  for (const auto& c : report.conditions) {
    r.csv += csv_field(c.name) + "," + to_string(c.verdict) + "," +
             csv_field(evidence_text(c.evidence)) + "\n";
  }
  if (cmd.family.kind == FamilyKind::scaled_profile) {
    const PsiReport psi = check_psi_properties(*cmd.family.profile);
    r.csv += "psi liminf at 0," + to_string(psi.liminf_at_zero) + "," +
             csv_field("near-zero minima:" + join_numbers(psi.near_zero_minima)) + "\n";
    r.csv += "psi integral," + to_string(psi.finite_positive_integral) + "," +
             csv_field("truncated integrals:" + join_numbers(psi.truncated_integrals)) + "\n";
    r.csv += "psi tail," + to_string(psi.vanishing_tail) + "," +
             csv_field("tail sups:" + join_numbers(psi.tail_sups)) + "\n";
    if (cmd.n_list.size() >= 2) {
      const GrowthReport growth = check_example3_growth(cmd.family, cmd.n_list);
      std::string text;
      for (std::size_t i = 0; i < growth.x0s.size(); ++i) {
        text += (i ? " | x0=" : "x0=") + format_number(growth.x0s[i]) + ":" +
                join_numbers(growth.tail_products[i]);
      }
      r.csv += "profile tail growth," + to_string(growth.verdict) + "," + csv_field(text) + "\n";
    }
  }
  return r;
}

Report run_study(const StudyCommand& cmd, std::size_t threads, std::ostream& log) {
  StudyOptions opts;
  opts.threads = threads;
  if (cmd.target == "rbm") {
    const double z0 = cmd.spec.z0;
    const double t = cmd.simulation.horizon;
    opts.target_cdf = [z0, t](double x) { return rbm_marginal_cdf(z0, t, x); };
  }
  const StudyReport report =
      convergence_study(cmd.family, cmd.spec, cmd.n_list, cmd.epsilon, cmd.simulation, opts);
  for (const auto& w : report.warnings) {
    log << "warning: " << w << "\n";
  }
  log << "family: " << report.family << "\n";
  log << "coupled_sup_mean is a coupling diagnostic, not a convergence claim\n";
  Report r;
  r.csv = write_study_csv(report.rows);
  if (!report.valid) {
    r.numerical_failure = "more than 0.1% of paths failed for some n";
  }
  return r;
}

Report run_skew(const SkewCommand& cmd, std::size_t threads) {
  Report r;
  r.csv = "k,a,c,estimate,se,alpha,paths,h,seed\n";
  for (const double k : cmd.k) {
    const ProbabilityEstimate est = skew_limit_estimate(k, cmd.a, cmd.simulation, threads);
    r.csv += format_number(k) + "," + format_number(cmd.a) + "," + format_number(k / cmd.a) + "," +
             format_number(est.estimate) + "," + format_number(est.se) + "," +
             format_number(skew_alpha(k)) + "," + std::to_string(est.paths) + "," +
             format_number(cmd.simulation.step) + "," + std::to_string(cmd.simulation.seed) + "\n";
  }
  return r;
}

Report run_modulus(const ModulusCommand& cmd, std::size_t threads) {
  const ModulusEstimate est = modulus_study(cmd.coeffs, cmd.z0, cmd.simulation, cmd.query, threads);
  const ModulusQuery& q = cmd.query;
  Report r;
  r.csv = "delta,D,alpha,beta,K,T,frequency,se,bound,paths,h,seed\n";
  r.csv += format_number(q.delta) + "," + format_number(q.distance) + "," + format_number(q.alpha) +
           "," + format_number(q.beta) + "," + format_number(q.diffusion_bound) + "," +
           format_number(q.horizon) + "," + format_number(est.frequency) + "," +
           format_number(est.se) + "," + format_number(est.bound) + "," +
           std::to_string(est.paths) + "," + format_number(cmd.simulation.step) + "," +
           std::to_string(cmd.simulation.seed) + "\n";
  return r;
}

template <class T>
bool parse_field(std::string_view s, T& out) {
  if constexpr (std::is_floating_point_v<T>) {
    // from_chars does not accept a leading '+', and neither does to_chars emit one.
    if (s == "nan" || s == "-nan") {
      out = std::numeric_limits<T>::quiet_NaN();
      return true;
    }
  }
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

Report execute(const RunConfig& config, std::size_t threads, std::ostream& log) {
  return std::visit(
      [&](const auto& cmd) -> Report {
        using T = std::decay_t<decltype(cmd)>;
        if constexpr (std::is_same_v<T, SimulateCommand>) {
          return run_simulate(cmd, threads);
        } else if constexpr (std::is_same_v<T, ScaleCommand>) {
          return run_scale(cmd);
        } else if constexpr (std::is_same_v<T, CheckCommand>) {
          return run_check(cmd);
        } else if constexpr (std::is_same_v<T, StudyCommand>) {
          return run_study(cmd, threads, log);
        } else if constexpr (std::is_same_v<T, SkewCommand>) {
          return run_skew(cmd, threads);
        } else {
          return run_modulus(cmd, threads);
        }
      },
      config.payload);
}

std::string write_study_csv(const std::vector<StudyRow>& rows) {
  std::string out(kStudyHeader);
  out += "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.n) + "," + format_number(r.ks) + "," + format_number(r.excursion_prob) +
           "," + format_number(r.excursion_se) + "," + format_number(r.coupled_sup_mean) + "," +
           std::to_string(r.paths) + "," + format_number(r.h) + "," + std::to_string(r.seed) + "\n";
  }
  return out;
}

std::vector<StudyRow> parse_study_csv(std::string_view csv) {
  std::vector<std::string_view> lines;
  while (!csv.empty()) {
    const auto nl = csv.find('\n');
    lines.push_back(csv.substr(0, nl));
    csv = nl == std::string_view::npos ? std::string_view{} : csv.substr(nl + 1);
  }
  if (lines.empty() || lines.front() != kStudyHeader) {
    throw ValidationError("study CSV: missing or unexpected header");
  }
  std::vector<StudyRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string_view> f;
    std::string_view line = lines[i];
    while (true) {
      const auto comma = line.find(',');
      f.push_back(line.substr(0, comma));
      if (comma == std::string_view::npos) {
        break;
      }
      line = line.substr(comma + 1);
    }
    StudyRow r;
    const bool ok = f.size() == 8 && parse_field(f[0], r.n) && parse_field(f[1], r.ks) &&
                    parse_field(f[2], r.excursion_prob) && parse_field(f[3], r.excursion_se) &&
                    parse_field(f[4], r.coupled_sup_mean) && parse_field(f[5], r.paths) &&
                    parse_field(f[6], r.h) && parse_field(f[7], r.seed);
    if (!ok) {
      throw ValidationError("study CSV: malformed row " + std::to_string(i));
    }
    rows.push_back(r);
  }
  return rows;
}

namespace {

void error_record(std::ostream& err, const std::string& kind, const std::string& message,
                  int code, nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json rec = {{"error", kind}, {"message", message}, {"exit_code", code}};
  rec.update(extra);
  err << rec.dump() << "\n";
}

void write_atomically(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) {
      throw ValidationError("cannot open output file " + path);
    }
    f << text;
    if (!f) {
      throw ValidationError("cannot write output file " + path);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ValidationError("cannot move output into place at " + path);
  }
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"reflectsim: reflected diffusions and their penalty approximations"};
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  bool quiet = false;
  app.add_option("--config", config_path, "JSON run config")->required();
  app.add_option("--out", out_path, "CSV output path (overrides config 'output')");
  auto* seed_opt = app.add_option("--seed", seed, "seed (overrides config 'seed')");
  auto* threads_opt =
      app.add_option("--threads", threads, "worker threads; does not change results")
          ->check(CLI::PositiveNumber);
  app.add_flag("--quiet", quiet, "suppress warnings");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    error_record(err, "usage", e.what(), 2);
    return 2;
  }
  if (threads_opt->count() == 0) {
    threads = default_thread_count();
  }

  std::ostringstream log;
  try {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
      throw ValidationError("cannot read config file " + config_path);
    }
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    const RunConfig rc =
        parse_run_config(doc, seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt);
    const Report report = execute(rc, threads, log);
    const std::string target = !out_path.empty() ? out_path : rc.output.value_or("");
    if (target.empty()) {
      out << report.csv;
    } else {
      write_atomically(target, report.csv);
    }
    if (!quiet) {
      err << log.str();
    }
    if (report.numerical_failure) {
      error_record(err, "numerical", *report.numerical_failure, 3);
      return 3;
    }
    return 0;
  } catch (const ValidationError& e) {
    error_record(err, "validation", e.what(), 2);
    return 2;
  } catch (const NumericalError& e) {
    error_record(err, "numerical", e.what(), 3, {{"step", e.step()}});
    return 3;
  } catch (const QuadratureError& e) {
    error_record(err, "quadrature", e.what(), 3, {{"lo", e.lo()}, {"hi", e.hi()}});
    return 3;
  } catch (const SingularDiffusionError& e) {
    error_record(err, "singular_diffusion", e.what(), 3, {{"x", e.x()}});
    return 3;
  } catch (const Error& e) {
    error_record(err, "numerical", e.what(), 3);
    return 3;
  }
}

}  // namespace reflectsim::cli
