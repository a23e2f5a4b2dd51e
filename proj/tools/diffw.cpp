// diffw: batch runner for the verification suites.
//
// Exit status: 0 all checks pass, 1 a check failed, 2 bad arguments or
// config, 3 report could not be written.

#include "diffw/suites.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw diffw::ConfigError("cannot open config file " + path);
  try {
    return nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw diffw::ConfigError("config file " + path + ": " + e.what());
  }
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report to " + path);
  out << text;
  out.close();
  if (!out) throw IoError("cannot write report to " + path);
}

void print_summary(const diffw::Report& rep) {
  std::size_t failed = 0;
  for (const auto& r : rep.sorted())
    if (!r.pass) {
      ++failed;
      std::cerr << "FAIL " << r.name << " residual=" << r.residual << " tolerance=" << r.tolerance << "\n";
    }
  std::cerr << rep.size() - failed << "/" << rep.size() << " checks passed\n";
}

struct RunArgs {
  std::string config_path;
  std::string suite;
  int dim = 1;
  std::uint64_t seed = 42;
  double tol = 0.0;
  std::string report;
  bool csv = false;
};

int do_run(const RunArgs& a, const CLI::App& cmd) {
  diffw::SuiteConfig cfg;
  if (!a.config_path.empty()) {
    const auto j = read_json_file(a.config_path);
    if (!j.is_object()) throw diffw::ConfigError("config file must hold an object");
    try {
      cfg.suite = j.value("suite", cfg.suite);
      cfg.dim = j.value("dim", cfg.dim);
      cfg.seed = j.value("seed", cfg.seed);
      if (j.contains("tol")) cfg.tol = j.at("tol").get<double>();
      if (j.contains("domain")) cfg.domain = j.at("domain");
      cfg.report_path = j.value("report", std::string());
      cfg.csv = j.value("csv", false);
    } catch (const nlohmann::json::exception& e) {
      throw diffw::ConfigError(std::string("config file: ") + e.what());
    }
  }
  if (cmd.count("--suite")) cfg.suite = a.suite;
  if (cmd.count("--dim")) cfg.dim = a.dim;
  if (cmd.count("--seed")) cfg.seed = a.seed;
  if (cmd.count("--tol")) cfg.tol = a.tol;
  if (cmd.count("--report")) cfg.report_path = a.report;
  if (cmd.count("--csv")) cfg.csv = a.csv;
  if (cfg.suite.empty()) throw diffw::ConfigError("no suite given");

  const auto rep = diffw::run_suite(cfg);
  emit(cfg.csv ? rep.to_csv() : rep.to_json_text(), cfg.report_path);
  print_summary(rep);
  return rep.all_pass() ? 0 : kExitFail;
}

struct EvolveArgs {
  std::string field;
  int steps = 200;
  std::string report;
};

int do_evolve(const EvolveArgs& a) {
  const auto j = read_json_file(a.field);
  const int dim = j.value("dim", 1);
  const auto& field_json = j.contains("field") ? j.at("field") : j;
  const diffw::TimeField p = diffw::time_field_from_json(field_json, dim);
  const diffw::SampleDomain dom = diffw::domain_from_json(j.value("domain", nlohmann::json()), dim);
  std::vector<diffw::Vec> probes;
  if (j.contains("probes")) {
    for (const auto& x : j.at("probes")) probes.push_back(diffw::vec_from_json(x));
  } else {
    probes = diffw::suites::probe_grid(dim, 0.5 * dom.box_halfwidth, 5);
  }
  for (const auto& x : probes)
    if (x.size() != dim) throw diffw::ConfigError("probe dimension differs from dim");

  diffw::EvolveOptions opt;
  opt.probes = probes;
  nlohmann::json out;
  out["steps"] = a.steps;
  out["dim"] = dim;
  out["lipschitz_bound"] = diffw::lipschitz_bound(p, diffw::uniform_times(opt.lipschitz_time_samples), dom);
  try {
    const auto curve = diffw::evolve(p, a.steps, dom, opt);
    out["defect"] = curve.defect();
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& x : probes)
      pts.push_back({{"x", diffw::to_json_value(x)}, {"gamma", diffw::to_json_value(diffw::Vec(curve.trajectory(x).back() - x))}});
    out["final"] = pts;
    out["aux"] = diffw::aux_derivative_check(p, curve, probes);
    out["pass"] = true;
  } catch (const diffw::StepCountTooSmall& e) {
    out["pass"] = false;
    out["error"] = e.what();
  } catch (const diffw::RefineRequired& e) {
    out["pass"] = false;
    out["error"] = e.what();
  }
  emit(out.dump(2) + "\n", a.report);
  if (!out["pass"].get<bool>()) std::cerr << out["error"].get<std::string>() << "\n";
  return out["pass"].get<bool>() ? 0 : kExitFail;
}

int do_counterexample(int n_max, const std::string& report) {
  if (n_max < 1) throw diffw::ConfigError("--n-max must be positive");
  const auto line = diffw::SampleDomain::defaults(1);
  nlohmann::json rows = nlohmann::json::array();
  bool ok = true;
  for (int n = 1; n <= n_max; ++n) {
    const double v = diffw::bc_counterexample(n, line);
    ok = ok && v >= 1.0 - 1e-9;
    rows.push_back({{"n", n}, {"value", v}, {"witness", n * M_PI}});
  }
  emit(rows.dump(2) + "\n", report);
  return ok ? 0 : kExitFail;
}

int do_semidirect(int dim, std::uint64_t seed, int count, const std::string& report) {
  diffw::SuiteConfig cfg;
  cfg.dim = dim;
  cfg.seed = seed;
  if (dim < 1 || dim > 3) throw diffw::ConfigError("dim must be 1, 2 or 3");
  if (count < 1) throw diffw::ConfigError("--count must be positive");
  const auto rep = diffw::suites::semidirect(cfg, count);
  emit(rep.to_json_text(), report);
  print_summary(rep);
  return rep.all_pass() ? 0 : kExitFail;
}

}  // namespace


int main(int argc, char** argv) {
  CLI::App app{"Numerical verification of weighted diffeomorphism and mapping groups"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run a verification suite");
  run_cmd->add_option("--config", run.config_path, "JSON config; flags override its entries");
  run_cmd->add_option("--suite", run.suite, "seminorms|group-axioms|inversion|regularity|mapping|actions|counterexample|all");
  run_cmd->add_option("--dim", run.dim, "domain dimension (1-3)");
  run_cmd->add_option("--seed", run.seed, "random seed");
  run_cmd->add_option("--tol", run.tol, "tolerance for every residual check");
  run_cmd->add_option("--report", run.report, "output path (stdout if omitted)");
  run_cmd->add_flag("--csv", run.csv, "write CSV instead of JSON");

  EvolveArgs ev;
  auto* ev_cmd = app.add_subcommand("evolve", "integrate a time-dependent field and report Gamma(1)");
  ev_cmd->add_option("--field", ev.field, "JSON field config")->required();
  ev_cmd->add_option("--steps", ev.steps, "RK4 step count");
  ev_cmd->add_option("--report", ev.report, "output path (stdout if omitted)");

  int n_max = 20;
  std::string ce_report;
  auto* ce_cmd = app.add_subcommand("counterexample", "sup |sin((1 + 1/(2n)) x) - sin x| for n = 1..N");
  ce_cmd->add_option("--n-max", n_max, "largest n");
  ce_cmd->add_option("--report", ce_report, "output path (stdout if omitted)");

  int sd_dim = 1, sd_count = 20;
  std::uint64_t sd_seed = 42;
  std::string sd_report;
  auto* sd_cmd = app.add_subcommand("semidirect-verify", "semidirect product associativity, inverse and action checks");
  sd_cmd->add_option("--dim", sd_dim, "domain dimension (1-3)");
  sd_cmd->add_option("--seed", sd_seed, "random seed");
  sd_cmd->add_option("--count", sd_count, "number of random triples");
  sd_cmd->add_option("--report", sd_report, "output path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run_cmd) return do_run(run, *run_cmd);
    if (*ev_cmd) return do_evolve(ev);
    if (*ce_cmd) return do_counterexample(n_max, ce_report);
    if (*sd_cmd) return do_semidirect(sd_dim, sd_seed, sd_count, sd_report);
  } catch (const diffw::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitUsage;
}
