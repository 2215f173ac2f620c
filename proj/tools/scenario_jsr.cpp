// scenario_jsr command-line tool.
//
// Exit codes: 0 success / Certified, 1 usage or runtime error,
// 2 BoundUndefined, 3 FeasibilityUncertain, 4 unmet precondition,
// 5 configuration error.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "scenario_jsr.hpp"
#include "scenario_jsr/io.hpp"
#include "scenario_jsr/svg_chart.hpp"

namespace {

using namespace sjsr;

constexpr int kExitError = 1;
constexpr int kExitUndefined = 2;
constexpr int kExitUncertain = 3;
constexpr int kExitPrecondition = 4;
constexpr int kExitConfig = 5;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Run manifest written next to each output file. Timestamps live only here so
// the artifacts themselves are reproducible from flags and seed.
class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)), started_(utc_now()) {}

  json config = json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;

  void write(const std::filesystem::path& path) const {
    json j;
    j["command"] = command_;
    j["config"] = config;
    j["seed"] = seed;
    j["version"] = kVersion;
    j["started"] = started_;
    j["finished"] = utc_now();
    j["outputs"] = outputs;
    write_text(path, j.dump(2) + "\n");
  }

  static void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParameterError("cannot write '" + path.string() + "'");
    out << text;
  }

 private:
  std::string command_;
  std::string started_;
};

std::filesystem::path manifest_path(const std::string& out) { return out + ".manifest.json"; }

void emit(const std::string& out, const std::string& text, Manifest& manifest) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  Manifest::write_text(out, text);
  manifest.outputs.push_back(out);
  manifest.write(manifest_path(out));
}

std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(cell, &used);
      if (used != cell.size() || v < 1) throw std::invalid_argument(cell);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ParameterError("bad --n-grid entry '" + cell + "'");
    }
  }
  if (out.empty()) throw ParameterError("--n-grid is empty");
  return out;
}

std::vector<double> parse_doubles(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ParameterError(std::string("bad ") + flag + " entry '" + cell + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

struct CertifyArgs {
  std::string obs;
  std::string simulate;
  std::size_t samples = 0;
  std::optional<std::size_t> modes;
  double beta = 0.05;
  std::optional<double> cap_C;
  std::uint64_t seed = 0;
  bool assume_no_barabanov = false;
  std::string out;
  std::string save_obs;
};

int run_certify(const CertifyArgs& a) {
  if (!a.assume_no_barabanov) {
    std::cerr << "certify: the bound assumes no mode of the system is Barabanov (A^T P A = g^2 P for some P > 0).\n"
                 "This cannot be checked from data; pass --assume-no-barabanov to accept the assumption.\n";
    return kExitPrecondition;
  }
  if (a.obs.empty() == a.simulate.empty()) {
    std::cerr << "certify: give exactly one of --obs or --simulate\n";
    return kExitError;
  }
  Manifest manifest("certify");
  SampleSet obs;
  std::size_t modes = a.modes.value_or(1);
  if (!a.obs.empty()) {
    obs = read_observations_csv(a.obs);
    manifest.config["obs"] = a.obs;
  } else {
    if (a.samples == 0) {
      std::cerr << "certify: --simulate needs --samples N\n";
      return kExitError;
    }
    const SwitchedSystem sys = system_from_json(read_json_file(a.simulate));
    assert_no_barabanov(sys);  // the system is at hand here, so check rather than trust
    Rng rng(a.seed);
    obs = observe_many(sys, a.samples, rng);
    if (!a.modes) modes = sys.m();
    manifest.config["simulate"] = a.simulate;
    manifest.config["samples"] = a.samples;
    if (!a.save_obs.empty()) {
      std::ostringstream csv;
      write_observations_csv(csv, obs);
      Manifest::write_text(a.save_obs, csv.str());
      manifest.outputs.push_back(a.save_obs);
    }
  }
  CertConfig cfg;
  cfg.beta = a.beta;
  cfg.cap_C = a.cap_C;
  cfg.modes = modes;
  cfg.seed = a.seed;
  manifest.config["modes"] = modes;
  manifest.config["beta"] = a.beta;
  manifest.config["cap_C"] = a.cap_C ? json(*a.cap_C) : json(nullptr);
  manifest.config["assume_no_barabanov"] = true;
  manifest.seed = a.seed;

  JsrCertificate cert;
  try {
    cert = certify(obs, cfg);
  } catch (const PreconditionError& e) {
    std::cerr << e.what() << '\n';
    return kExitPrecondition;
  }
  emit(a.out, to_json(cert).dump(2) + "\n", manifest);
  switch (cert.status) {
    case CertStatus::Certified:
      return 0;
    case CertStatus::BoundUndefined:
      std::cerr << "certify: bound undefined (eps * kappa / m >= 1 or n = 1)";
      if (cert.suggested_min_N) std::cerr << "; about N >= " << *cert.suggested_min_N << " samples would define it";
      std::cerr << '\n';
      return kExitUndefined;
    case CertStatus::FeasibilityUncertain:
      std::cerr << "certify: the level solver could not settle feasibility; the result is not certified\n";
      return kExitUncertain;
  }
  return kExitError;
}

// ---------------------------------------------------------------------------

struct DemoArgs {
  NetworkConfig cfg;
  std::string grid;
  std::string out_dir = "consensus_out";
};

int run_consensus_demo(DemoArgs a) {
  if (!a.grid.empty()) a.cfg.N_grid = parse_grid(a.grid);
  Manifest manifest("consensus-demo");
  manifest.config = to_json(a.cfg);
  manifest.seed = a.cfg.seed;

  std::optional<SweepResult> swept;
  try {
    swept = consensus_sweep(a.cfg);
  } catch (const ConfigError& e) {
    std::cerr << "consensus-demo: " << e.what() << '\n';
    return kExitConfig;
  }
  const SweepResult& result = *swept;

  const std::filesystem::path dir(a.out_dir);
  std::ostringstream csv;
  write_sweep_csv(csv, result.rows);
  Manifest::write_text(dir / "sweep.csv", csv.str());
  Manifest::write_text(dir / "sweep.svg", render_sweep_svg(result.rows));
  Manifest::write_text(dir / "hidden_system.json", to_json(result.hidden).dump(2) + "\n");
  manifest.outputs = {(dir / "sweep.csv").string(), (dir / "sweep.svg").string(),
                      (dir / "hidden_system.json").string()};
  manifest.config["draws"] = result.draws;
  manifest.config["whitebox"] = to_json(result.bracket);
  manifest.write(dir / "manifest.json");

  for (const SweepRow& r : result.rows) {
    std::cout << "N=" << r.N << " gamma*=" << format_double(r.gamma_star) << " kappa=" << format_double(r.kappa)
              << " bound1=" << format_optional(r.bound1) << " bound2=" << format_optional(r.bound2) << '\n';
  }
  std::cout << "white-box bracket [" << format_double(result.bracket.lower) << ", "
            << format_double(result.bracket.upper) << "]\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct QlpArgs {
  std::string instance;
  SolveOptions opts;
  std::optional<double> lambda_hi;
  std::string oracle = "auto";
  std::string out;
};

int run_qlp_solve(QlpArgs a) {
  Manifest manifest("qlp-solve");
  const QlpInstance inst = qlp_instance_from_json(read_json_file(a.instance));
  a.opts.lambda_hi = a.lambda_hi;
  a.opts.oracle = a.oracle == "dykstra" ? LevelOracle::Dykstra : LevelOracle::Auto;
  manifest.config = {{"instance", a.instance},
                     {"tol_lambda", a.opts.tol_lambda_rel},
                     {"tol_feas", a.opts.tol_feas},
                     {"max_iter", a.opts.max_iter},
                     {"lambda_hi", a.lambda_hi ? json(*a.lambda_hi) : json(nullptr)},
                     {"oracle", a.oracle}};
  const QlpSolution sol = solve(inst, a.opts);
  emit(a.out, to_json(sol).dump(2) + "\n", manifest);
  return 0;
}

// ---------------------------------------------------------------------------

struct BetaTableArgs {
  long k = 2;
  long N = 50;
  std::string eps;
  double eps_min = 0.01;
  double eps_max = 0.2;
  int steps = 20;
  std::string out;
};

int run_beta_table(const BetaTableArgs& a) {
  std::vector<double> grid;
  if (!a.eps.empty()) {
    grid = parse_doubles(a.eps, "--eps");
  } else {
    if (a.steps < 1) throw ParameterError("--steps must be positive");
    for (int i = 0; i < a.steps; ++i) {
      const double t = a.steps == 1 ? 0.0 : static_cast<double>(i) / (a.steps - 1);
      grid.push_back(a.eps_min + t * (a.eps_max - a.eps_min));
    }
  }
  Manifest manifest("beta-table");
  manifest.config = {{"k", a.k}, {"N", a.N}, {"eps", grid}};
  std::ostringstream csv;
  csv << "eps,k,N,phi\n";
  for (double e : grid) csv << format_double(e) << ',' << a.k << ',' << a.N << ',' << format_double(phi(e, a.k, a.N)) << '\n';
  emit(a.out, csv.str(), manifest);
  return 0;
}

// ---------------------------------------------------------------------------

struct ValidateArgs {
  std::string system;
  ValidationOptions vopts;
  double beta = 0.05;
  std::optional<double> cap_C;
  std::string out;
};

int run_validate(const ValidateArgs& a) {
  const SwitchedSystem sys = system_from_json(read_json_file(a.system));
  CertConfig cfg;
  cfg.beta = a.beta;
  cfg.cap_C = a.cap_C;
  cfg.modes = sys.m();
  cfg.seed = a.vopts.seed;
  Manifest manifest("validate");
  manifest.config = {{"system", a.system},
                     {"samples", a.vopts.samples},
                     {"trials", a.vopts.trials},
                     {"violation_samples", a.vopts.violation_samples},
                     {"depth", a.vopts.depth},
                     {"beta", a.beta},
                     {"cap_C", a.cap_C ? json(*a.cap_C) : json(nullptr)}};
  manifest.seed = a.vopts.seed;
  ValidationReport report;
  try {
    report = validate_certificate_montecarlo(sys, cfg, a.vopts);
  } catch (const PreconditionError& e) {
    std::cerr << e.what() << '\n';
    return kExitPrecondition;
  }
  emit(a.out, to_json(report).dump(2) + "\n", manifest);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven joint spectral radius bounds via scenario optimization"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CertifyArgs cert;
  auto* c = app.add_subcommand("certify", "Upper-bound the JSR of a black-box switched system from observations");
  c->add_option("--obs", cert.obs, "Observation CSV ('# n=<n>' header, rows x_1..x_n,y_1..y_n)");
  c->add_option("--simulate", cert.simulate, "System JSON to sample observations from");
  c->add_option("--samples", cert.samples, "Number of simulated observations");
  c->add_option("--modes", cert.modes, "Number of modes m (default: from --simulate, else 1)");
  c->add_option("--beta", cert.beta, "Confidence parameter")->check(CLI::Range(0.0, 1.0));
  c->add_option("--cap-C", cert.cap_C, "Frobenius cap C on P (default 10 n)");
  c->add_option("--seed", cert.seed, "Seed for --simulate");
  c->add_flag("--assume-no-barabanov", cert.assume_no_barabanov, "Accept that no mode is a Barabanov matrix");
  c->add_option("--out", cert.out, "Certificate JSON path (default stdout)");
  c->add_option("--save-obs", cert.save_obs, "Also write the simulated observations as CSV");

  DemoArgs demo;
  auto* d = app.add_subcommand("consensus-demo", "Bound sweep on a projected consensus network");
  d->add_option("--nodes", demo.cfg.n, "Number of agents n");
  d->add_option("--modes", demo.cfg.m, "Number of modes m");
  d->add_option("--beta", demo.cfg.beta, "Confidence parameter");
  d->add_option("--n-grid", demo.grid, "Comma-separated sample sizes");
  d->add_option("--seed", demo.cfg.seed, "Seed");
  d->add_option("--depth", demo.cfg.K, "Product length for the white-box bracket");
  d->add_option("--p-edge", demo.cfg.p_edge, "Edge probability of the random graphs");
  d->add_option("--cap-C", demo.cfg.cap_C, "Frobenius cap C on P");
  d->add_flag("--identity", demo.cfg.identity_modes, "Use identity modes (degenerate; rejected)");
  d->add_option("--out-dir", demo.out_dir, "Output directory");

  QlpArgs qlp;
  auto* q = app.add_subcommand("qlp-solve", "Solve a quasi-linear program given as JSON");
  q->add_option("--instance", qlp.instance, "Instance JSON")->required();
  q->add_option("--tol-lambda", qlp.opts.tol_lambda_rel, "Relative bracket width");
  q->add_option("--tol-feas", qlp.opts.tol_feas, "Feasibility tolerance");
  q->add_option("--max-iter", qlp.opts.max_iter, "Dykstra cycle limit");
  q->add_option("--lambda-hi", qlp.lambda_hi, "Upper end of the initial bracket");
  q->add_option("--oracle", qlp.oracle, "Level oracle")->check(CLI::IsMember({"auto", "dykstra"}));
  q->add_option("--out", qlp.out, "Solution JSON path (default stdout)");

  BetaTableArgs bt;
  auto* b = app.add_subcommand("beta-table", "Tabulate the binomial tail phi(eps, k, N)");
  b->add_option("--k", bt.k, "k");
  b->add_option("--N", bt.N, "N");
  b->add_option("--eps", bt.eps, "Comma-separated eps values (overrides the range)");
  b->add_option("--eps-min", bt.eps_min, "Smallest eps");
  b->add_option("--eps-max", bt.eps_max, "Largest eps");
  b->add_option("--steps", bt.steps, "Grid points");
  b->add_option("--out", bt.out, "CSV path (default stdout)");

  ValidateArgs val;
  auto* v = app.add_subcommand("validate", "Monte Carlo check of the bound on a known system");
  v->add_option("--system", val.system, "System JSON")->required();
  v->add_option("--samples", val.vopts.samples, "N per trial");
  v->add_option("--trials", val.vopts.trials, "Number of trials");
  v->add_option("--violation-samples", val.vopts.violation_samples, "Fresh draws per trial");
  v->add_option("--depth", val.vopts.depth, "Product length for the white-box bracket (0 = auto)");
  v->add_option("--beta", val.beta, "Confidence parameter");
  v->add_option("--cap-C", val.cap_C, "Frobenius cap C on P");
  v->add_option("--seed", val.vopts.seed, "Seed");
  v->add_option("--out", val.out, "Report JSON path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  try {
    if (c->parsed()) return run_certify(cert);
    if (d->parsed()) return run_consensus_demo(demo);
    if (q->parsed()) return run_qlp_solve(qlp);
    if (b->parsed()) return run_beta_table(bt);
    if (v->parsed()) return run_validate(val);
  } catch (const PreconditionError& e) {
    std::cerr << e.what() << '\n';
    return kExitPrecondition;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
