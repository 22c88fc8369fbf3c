// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "reflectsim/cli.hpp"
#include "reflectsim/error.hpp"

using namespace reflectsim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("reflectsim_cli_" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const json& doc) { std::ofstream(p) << doc.dump(2); }

struct Outcome {
  int code = -1;
  std::string stderr_text;
};

Outcome run_tool(const TempDir& dir, const std::string& args, const std::string& env = "") {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd =
      env + " " + std::string(REFLECTSIM_CLI_PATH) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

json study_config() {
  return {
      {"command", "study"},
      {"seed", 17},
      {"spec", {{"z0", 1.0}}},
      {"family",
       {{"kind", "wall_left"},
        {"a", {{"kind", "power"}, {"coef", 10.0}, {"exponent", 1.0}}},
        {"c", {{"kind", "power"}, {"exponent", -0.5}}}}},
      {"n_list", {1, 10, 100}},
      {"epsilon", 0.2},
      {"target", "rbm"},
      {"simulation", {{"horizon", 1.0}, {"step", 1e-3}, {"num_paths", 300}}},
  };
}

std::string execute_csv(const json& doc) {
  std::ostringstream log;
  return cli::execute(cli::parse_run_config(doc), 1, log).csv;
}

}  // namespace

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(cli::format_number(1.0), "1");
  EXPECT_EQ(cli::format_number(0.1), "0.1");
  EXPECT_EQ(cli::format_number(1e-4), "1e-04");
  EXPECT_EQ(cli::format_number(0.001), "0.001");
  EXPECT_EQ(cli::format_number(-std::numeric_limits<double>::infinity()), "-inf");
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100000; ++i) {
    double v;
    const std::uint64_t bits = rng();
    std::memcpy(&v, &bits, sizeof v);
    if (!std::isfinite(v)) {
      continue;
    }
    const std::string s = cli::format_number(v);
    ASSERT_EQ(std::strtod(s.c_str(), nullptr), v) << s;
  }
}

TEST(StudyCsv, RoundTripsExactly) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<StudyRow> rows;
  for (int i = 0; i < 200; ++i) {
    StudyRow r;
    r.n = static_cast<int>(rng() % 100000) + 1;
    r.ks = u(rng);
    r.excursion_prob = u(rng) * 1e-3;
    r.excursion_se = std::sqrt(r.excursion_prob / 2e4);
    r.coupled_sup_mean = u(rng) * 1e5;
    r.paths = rng() % 1000000;
    r.h = std::ldexp(1.0, -static_cast<int>(rng() % 30));
    r.seed = rng();
    rows.push_back(r);
  }
  const auto parsed = cli::parse_study_csv(cli::write_study_csv(rows));
  ASSERT_EQ(parsed.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(parsed[i].n, rows[i].n);
    EXPECT_EQ(parsed[i].ks, rows[i].ks);
    EXPECT_EQ(parsed[i].excursion_prob, rows[i].excursion_prob);
    EXPECT_EQ(parsed[i].excursion_se, rows[i].excursion_se);
    EXPECT_EQ(parsed[i].coupled_sup_mean, rows[i].coupled_sup_mean);
    EXPECT_EQ(parsed[i].paths, rows[i].paths);
    EXPECT_EQ(parsed[i].h, rows[i].h);
    EXPECT_EQ(parsed[i].seed, rows[i].seed);
  }
  EXPECT_THROW(cli::parse_study_csv("n,ks\n"), ValidationError);
  EXPECT_THROW(cli::parse_study_csv(std::string(cli::kStudyHeader) + "\n1,2,3\n"), ValidationError);
}

TEST(RunConfig, RejectsUnknownKeysAtEveryLevel) {
  auto top = study_config();
  top["extra"] = 1;
  EXPECT_THROW(cli::parse_run_config(top), ValidationError);
  auto nested = study_config();
  nested["simulation"]["dt"] = 0.1;
  EXPECT_THROW(cli::parse_run_config(nested), ValidationError);
  auto schedule = study_config();
  schedule["family"]["a"]["base"] = 2.0;
  EXPECT_THROW(cli::parse_run_config(schedule), ValidationError);
  auto spec = study_config();
  spec["spec"]["sigma"] = 1.0;
  EXPECT_THROW(cli::parse_run_config(spec), ValidationError);
}

TEST(RunConfig, RejectsBadValues) {
  auto neg_step = study_config();
  neg_step["simulation"]["step"] = -1e-3;
  EXPECT_THROW(cli::parse_run_config(neg_step), ValidationError);
  auto bad_command = study_config();
  bad_command["command"] = "plot";
  EXPECT_THROW(cli::parse_run_config(bad_command), ValidationError);
  auto bad_n = study_config();
  bad_n["n_list"] = json::array({1, -2});
  EXPECT_THROW(cli::parse_run_config(bad_n), ValidationError);
  auto string_seed = study_config();
  string_seed["seed"] = "17";
  EXPECT_THROW(cli::parse_run_config(string_seed), ValidationError);
  auto missing_profile = study_config();
  missing_profile["family"]["kind"] = "scaled_profile";
  EXPECT_THROW(cli::parse_run_config(missing_profile), ValidationError);
}

TEST(RunConfig, SeedOverride) {
  EXPECT_EQ(cli::parse_run_config(study_config()).seed, 17u);
  const auto rc = cli::parse_run_config(study_config(), 99);
  EXPECT_EQ(rc.seed, 99u);
  EXPECT_EQ(std::get<cli::StudyCommand>(rc.payload).simulation.seed, 99u);
}

TEST(Execute, ScaleOfBrownianMotion) {
  const json doc = {{"command", "scale"}, {"spec", {{"z0", 1.0}}}, {"points", {2.0, 1.0}}};
  EXPECT_EQ(execute_csv(doc), "x,s_value,s_log_abs,s_sign\n2,1,0,1\n1,0,-inf,0\n");
}

TEST(Execute, ScaleOfWallMember) {
  const json doc = {{"command", "scale"},
                    {"spec", {{"z0", 1.0}}},
                    {"family", {{"kind", "wall_left"}, {"a", 10.0}, {"c", 0.5}}},
                    {"points", {-0.5}}};
  const std::string csv = execute_csv(doc);
  const auto row = csv.substr(csv.find('\n') + 1);
  const double s = std::strtod(row.substr(row.find(',') + 1).c_str(), nullptr);
  EXPECT_NEAR(s, -(1.0 + std::expm1(10.0) / 20.0), 1e-6);
}

TEST(Execute, CheckReportsVerdicts) {
  const json doc = {
      {"command", "check"},
      {"spec", {{"z0", 1.0}}},
      {"family",
       {{"kind", "wall_left"},
        {"a", {{"kind", "power"}, {"exponent", 1.0}}},
        {"c", {{"kind", "power"}, {"exponent", -2.0}}}}},
      {"n_list", {10, 100, 1000, 10000, 100000}},
  };
  const std::string csv = execute_csv(doc);
  EXPECT_EQ(csv.rfind("condition,verdict,evidence\n", 0), 0u);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);
  EXPECT_NE(line.find(",fail,"), std::string::npos) << line;
  int rows = 1;
  while (std::getline(lines, line)) {
    ++rows;
  }
  EXPECT_EQ(rows, 5);
}

TEST(Execute, SimulateShapeAndHeader) {
  const json doc = {{"command", "simulate"},
                    {"seed", 3},
                    {"spec", {{"z0", 0.1}}},
                    {"simulation", {{"horizon", 1.0}, {"step", 0.25}, {"num_paths", 2}}}};
  const std::string csv = execute_csv(doc);
  EXPECT_EQ(csv.rfind("path,k,t,x,l\n0,0,0,0.1,0\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 5);
}

TEST(Execute, SkewAndModulusHeaders) {
  const json skew = {{"command", "skew"},
                     {"k", {1.0}},
                     {"a", 200.0},
                     {"simulation", {{"horizon", 0.01}, {"step", 1e-4}, {"num_paths", 10}}}};
  EXPECT_EQ(execute_csv(skew).rfind("k,a,c,estimate,se,alpha,paths,h,seed\n1,200,0.005,", 0), 0u);
  const json modulus = {
      {"command", "modulus"},
      {"spec", {{"z0", 0.0}}},
      {"simulation", {{"horizon", 0.01}, {"step", 1e-5}, {"num_paths", 10}}},
      {"query", {{"delta", 1e-4}, {"D", 0.5}, {"alpha", -1.0}, {"beta", 1.0}, {"K", 1.0}}}};
  EXPECT_EQ(execute_csv(modulus).rfind(
                "delta,D,alpha,beta,K,T,frequency,se,bound,paths,h,seed\n1e-04,0.5,-1,1,1,0.01,0,",
                0),
            0u);
}

TEST(Tool, StudyIsByteReproducibleAcrossThreadCounts) {
  TempDir dir;
  write(dir / "study.json", study_config());
  const auto base = "--config " + (dir / "study.json").string() + " --quiet";
  ASSERT_EQ(run_tool(dir, base + " --threads 1 --out " + (dir / "a.csv").string()).code, 0);
  ASSERT_EQ(run_tool(dir, base + " --threads 8 --out " + (dir / "b.csv").string()).code, 0);
  ASSERT_EQ(run_tool(dir, base + " --threads 1 --out " + (dir / "c.csv").string()).code, 0);
  const std::string a = slurp(dir / "a.csv");
  EXPECT_EQ(a, slurp(dir / "b.csv"));
  EXPECT_EQ(a, slurp(dir / "c.csv"));
  EXPECT_EQ(a.rfind(std::string(cli::kStudyHeader) + "\n", 0), 0u);
  const auto rows = cli::parse_study_csv(a);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(cli::write_study_csv(rows), a);
}

TEST(Tool, SeedFlagOverridesConfig) {
  TempDir dir;
  write(dir / "study.json", study_config());
  const auto base = "--config " + (dir / "study.json").string() + " --quiet";
  ASSERT_EQ(run_tool(dir, base + " --out " + (dir / "a.csv").string()).code, 0);
  ASSERT_EQ(run_tool(dir, base + " --seed 18 --out " + (dir / "b.csv").string()).code, 0);
  EXPECT_NE(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  EXPECT_NE(slurp(dir / "b.csv").find(",18\n"), std::string::npos);
}

TEST(Tool, ThreadsEnvironmentFallback) {
  TempDir dir;
  write(dir / "study.json", study_config());
  const auto base = "--config " + (dir / "study.json").string() + " --quiet";
  ASSERT_EQ(run_tool(dir, base + " --out " + (dir / "a.csv").string()).code, 0);
  ASSERT_EQ(run_tool(dir, base + " --out " + (dir / "b.csv").string(), "REFLECTSIM_THREADS=3").code,
            0);
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
}

TEST(Tool, InvalidConfigExitsTwoWithoutOutput) {
  TempDir dir;
  auto doc = study_config();
  doc["simulation"]["step"] = -1e-3;
  write(dir / "bad.json", doc);
  const auto out = dir / "never.csv";
  const auto r = run_tool(dir, "--config " + (dir / "bad.json").string() + " --out " + out.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_FALSE(fs::exists(out.string() + ".tmp"));
  ASSERT_EQ(std::count(r.stderr_text.begin(), r.stderr_text.end(), '\n'), 1);
  const auto rec = json::parse(r.stderr_text);
  EXPECT_EQ(rec.at("error"), "validation");
  EXPECT_EQ(rec.at("exit_code"), 2);

  std::ofstream(dir / "broken.json") << "{ not json";
  EXPECT_EQ(run_tool(dir, "--config " + (dir / "broken.json").string()).code, 2);
  EXPECT_EQ(run_tool(dir, "--config " + (dir / "missing.json").string()).code, 2);
  EXPECT_EQ(run_tool(dir, "--bogus-flag").code, 2);
}

TEST(Tool, NumericalFailureExitsThree) {
  TempDir dir;
  const json doc = {{"command", "simulate"},
                    {"spec", {{"z0", 1.0}, {"drift", {{"polynomial", {0.0, 0.0, 1e10}}}}}},
                    {"simulation", {{"horizon", 1.0}, {"step", 0.01}, {"num_paths", 1}}}};
  write(dir / "blowup.json", doc);
  const auto out = dir / "never.csv";
  const auto r =
      run_tool(dir, "--config " + (dir / "blowup.json").string() + " --out " + out.string());
  EXPECT_EQ(r.code, 3);
  EXPECT_FALSE(fs::exists(out));
  const auto rec = json::parse(r.stderr_text);
  EXPECT_EQ(rec.at("error"), "numerical");
  EXPECT_GT(rec.at("step").get<int>(), 0);
}

TEST(Tool, OutputPathFromConfig) {
  TempDir dir;
  json doc = {{"command", "scale"}, {"spec", {{"z0", 1.0}}}, {"points", {2.0}}};
  doc["output"] = (dir / "scale.csv").string();
  write(dir / "scale.json", doc);
  ASSERT_EQ(run_tool(dir, "--config " + (dir / "scale.json").string()).code, 0);
  EXPECT_EQ(slurp(dir / "scale.csv"), "x,s_value,s_log_abs,s_sign\n2,1,0,1\n");
}
