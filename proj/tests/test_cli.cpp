#include <diffw/suites.hpp>
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace diffw;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / ("diffw_cli_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

/// Runs the CLI with stdout and stderr captured; returns the exit status.
int run(const std::string& args, std::string* out = nullptr) {
  const fs::path o = scratch() / "stdout.txt", e = scratch() / "stderr.txt";
  const std::string cmd = std::string("\"") + DIFFW_CLI_PATH + "\" " + args + " >\"" + o.string() + "\" 2>\"" +
                          e.string() + "\"";
  const int status = std::system(cmd.c_str());
  if (out) *out = slurp(o);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, GroupAxiomsPassInOneDimension) {
  std::string out;
  ASSERT_EQ(run("run --suite group-axioms --dim 1 --seed 42", &out), 0);
  const auto j = nlohmann::json::parse(out);
  ASSERT_TRUE(j.is_array());
  EXPECT_GE(j.size(), 4u);
  for (const auto& r : j) {
    EXPECT_TRUE(r.at("pass").get<bool>()) << r.dump();
    EXPECT_TRUE(r.contains("paper_anchor"));
  }
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("run --suite no-such-suite"), 2);
  EXPECT_EQ(run("run --suite \"\""), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("run --suite seminorms --dim 7"), 2);
  const fs::path bad = scratch() / "bad.json";
  write(bad, "{ not json");
  EXPECT_EQ(run("run --config \"" + bad.string() + "\""), 2);
  write(bad, R"({"suite": "seminorms", "domain": {"points_per_axis": 1}})");
  EXPECT_EQ(run("run --config \"" + bad.string() + "\""), 2);
  EXPECT_EQ(run("run --config /nonexistent/cfg.json"), 2);
  EXPECT_EQ(run("counterexample --n-max 0"), 2);
}

TEST(Cli, UnwritableReportExitsThree) {
  EXPECT_EQ(run("counterexample --n-max 2 --report /nonexistent/dir/out.json"), 3);
}

TEST(Cli, FailedChecksExitOne) {
  // A zero tolerance cannot absorb round-off in the associativity residual.
  EXPECT_EQ(run("run --suite group-axioms --dim 1 --tol 0"), 1);
  const fs::path f = scratch() / "field.json";
  write(f, R"({"dim": 1, "field": {"kind": "linear", "params": {"A": [[1.0]]}}})");
  std::string out;
  EXPECT_EQ(run("evolve --field \"" + f.string() + "\" --steps 3", &out), 1);
  EXPECT_FALSE(nlohmann::json::parse(out).at("pass").get<bool>());
}

TEST(Cli, ReportsAreReproducible) {
  const fs::path a = scratch() / "a.json", b = scratch() / "b.json";
  ASSERT_EQ(run("run --suite seminorms --dim 1 --seed 5 --report \"" + a.string() + "\""), 0);
  ASSERT_EQ(run("run --suite seminorms --dim 1 --seed 5 --report \"" + b.string() + "\""), 0);
  EXPECT_FALSE(slurp(a).empty());
  EXPECT_EQ(slurp(a), slurp(b));
}

TEST(Cli, CounterexampleValues) {
  std::string out;
  ASSERT_EQ(run("counterexample --n-max 20", &out), 0);
  const auto rows = nlohmann::json::parse(out);
  ASSERT_EQ(rows.size(), 20u);
  for (int n = 1; n <= 20; ++n) {
    EXPECT_EQ(rows[n - 1].at("n").get<int>(), n);
    EXPECT_GE(rows[n - 1].at("value").get<double>(), 1.0 - 1e-9);
  }
}

TEST(Cli, FlagsOverrideConfigAndCsvOutput) {
  const fs::path cfg = scratch() / "cfg.json";
  const fs::path rep = scratch() / "rep.csv";
  write(cfg, R"({"suite": "no-such-suite", "dim": 1, "csv": false, "report": "/nonexistent/x.json"})");
  ASSERT_EQ(run("run --config \"" + cfg.string() + "\" --suite counterexample --csv --report \"" + rep.string() + "\""),
            0);
  const std::string csv = slurp(rep);
  EXPECT_EQ(csv.rfind("name,paper_anchor,residual,tolerance,pass,value\n", 0), 0u);
  EXPECT_NE(csv.find("true"), std::string::npos);
  EXPECT_EQ(csv.find("false"), std::string::npos);
}

TEST(Cli, EvolveSubcommand) {
  const fs::path f = scratch() / "ramp.json";
  write(f, R"({"dim": 1, "probes": [[0.0], [1.5]],
    "field": {"terms": [{"coeff": {"kind": "polynomial", "coeffs": [0.0, 1.0]},
                         "field": {"kind": "constant", "params": {"value": [0.6]}}}]}})");
  std::string out;
  ASSERT_EQ(run("evolve --field \"" + f.string() + "\" --steps 20", &out), 0);
  const auto j = nlohmann::json::parse(out);
  EXPECT_TRUE(j.at("pass").get<bool>());
  ASSERT_EQ(j.at("final").size(), 2u);
  // integral of 0.6 t over [0, 1]
  for (const auto& p : j.at("final")) EXPECT_NEAR(p.at("gamma")[0].get<double>(), 0.3, 1e-12);
  EXPECT_EQ(j.at("lipschitz_bound").get<double>(), 0.0);
}

TEST(Cli, SemidirectSubcommand) {
  std::string out;
  ASSERT_EQ(run("semidirect-verify --dim 1 --seed 3 --count 4", &out), 0);
  const auto j = nlohmann::json::parse(out);
  EXPECT_EQ(j.size(), 3u);
  EXPECT_EQ(run("semidirect-verify --dim 4"), 2);
}

TEST(Config, MapKinds) {
  const Vec x = Vec::Constant(2, 0.5);
  const auto j = nlohmann::json::parse(R"({"kind": "sum", "params": {"terms": [
      {"kind": "affine", "params": {"A": [[1, 2], [0, 1]], "b": [1, -1]}},
      {"kind": "scaled", "params": {"factor": 2, "map": {"kind": "identity"}}},
      {"kind": "gaussian_bump", "params": {"center": [0, 0], "sigma": 1, "amplitude": [1, 0]}}]}})");
  const SmoothMap m = map_from_json(j, 2);
  Vec want(2);
  want << 0.5 + 1.0 + 1.0 + 1.0 + std::exp(-0.5), 0.5 - 1.0 + 1.0;
  EXPECT_LT((m(x) - want).norm(), 1e-14);
  EXPECT_EQ(map_from_json(nlohmann::json::parse(R"({"kind": "zero", "params": {"dim_out": 3}})"), 2).dim_out(), 3);
  EXPECT_THROW(map_from_json(nlohmann::json::parse(R"({"kind": "spline"})"), 1), ConfigError);
  EXPECT_THROW(map_from_json(nlohmann::json::parse(R"({"params": {}})"), 1), ConfigError);
  EXPECT_THROW(map_from_json(nlohmann::json::parse(R"({"kind": "affine", "params": {"A": [[1, 2], [3]]}})"), 2),
               ConfigError);
  EXPECT_THROW(map_from_json(nlohmann::json::parse(R"({"kind": "constant", "params": {"value": "x"}})"), 1),
               ConfigError);
}

TEST(Config, TimeFieldsDomainsAndGroups) {
  const auto lin = time_field_from_json(nlohmann::json::parse(R"({"kind": "linear", "params": {"A": [[0, 1], [-1, 0]]}})"), 2);
  EXPECT_LT((lin.value(0.3, Vec::Unit(2, 0)) - Vec(-Vec::Unit(2, 1))).norm(), 1e-15);
  const auto sine = time_field_from_json(nlohmann::json::parse(R"({"terms": [
      {"coeff": {"kind": "sine", "amplitude": 2, "frequency": 3},
       "field": {"kind": "constant", "params": {"value": [1]}}}]})"), 1);
  EXPECT_NEAR(sine.value(0.2, Vec::Zero(1))(0), 2.0 * std::sin(0.6), 1e-15);
  EXPECT_THROW(time_field_from_json(nlohmann::json::parse(R"({"terms": []})"), 1), ConfigError);
  EXPECT_THROW(time_field_from_json(nlohmann::json::parse(R"({"kind": "quadratic"})"), 1), ConfigError);

  const auto d = domain_from_json(nlohmann::json::parse(R"({"box_halfwidth": 4, "points_per_axis": 11, "tail_radii": [1, 3]})"), 2);
  EXPECT_EQ(d.box_halfwidth, 4.0);
  EXPECT_EQ(d.points_per_axis, 11);
  EXPECT_EQ(d.dimension, 2);
  EXPECT_EQ(domain_from_json(nullptr, 3).points_per_axis, 25);
  EXPECT_THROW(domain_from_json(nlohmann::json::parse(R"({"tail_radii": [3, 1]})"), 1), ConfigError);
  EXPECT_THROW(domain_from_json(nlohmann::json::parse(R"({"box_halfwidth": 2, "tail_radii": [3]})"), 1), ConfigError);
  EXPECT_THROW(domain_from_json(nlohmann::json::parse("[1]"), 1), ConfigError);

  EXPECT_EQ(group_from_json(nlohmann::json::parse(R"({"group": "SO3"})")).name(), MatrixGroup::so3().name());
  EXPECT_EQ(group_from_json(nlohmann::json::parse(R"({"group": "GL", "n": 2})")).n(), 2);
  EXPECT_THROW(group_from_json(nlohmann::json::parse(R"({"group": "Sp"})")), ConfigError);
}

TEST(Report, JsonAndCsvShapes) {
  Report rep;
  rep.add("b.second", "x = y", 1e-12, 1e-10);
  rep.add("a.first", "quoted \"anchor\"", 2.0, 1.0).value = 3.5;
  rep.add("c.nan", "nan fails", std::nan(""), 1.0);
  rep.add_flag("d.flag", "flag", true);
  EXPECT_FALSE(rep.all_pass());
  const auto j = nlohmann::json::parse(rep.to_json_text());
  ASSERT_EQ(j.size(), 4u);
  EXPECT_EQ(j[0].at("name"), "a.first");
  EXPECT_EQ(j[0].at("value"), 3.5);
  EXPECT_EQ(j[2].at("residual"), "nan");
  EXPECT_FALSE(j[2].at("pass").get<bool>());
  EXPECT_TRUE(j[3].at("pass").get<bool>());
  const std::string csv = rep.to_csv();
  EXPECT_NE(csv.find("\"quoted \"\"anchor\"\"\""), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);

  CheckRecord inf{"inf", "", std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), false, {}};
  const nlohmann::json ji = inf;
  EXPECT_EQ(ji.at("residual"), "inf");
  EXPECT_EQ(ji.at("tolerance"), "-inf");
}
