#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "scenario_jsr/blackbox.hpp"
#include "scenario_jsr/errors.hpp"
#include "scenario_jsr/parallel.hpp"
#include "scenario_jsr/qlp.hpp"
#include "scenario_jsr/rng.hpp"
#include "scenario_jsr/scenario.hpp"
#include "scenario_jsr/symmat.hpp"

namespace sjsr {

struct CertConfig {
  /// Frobenius cap C on P; must satisfy C >= n. Defaults to 10 n.
  std::optional<double> cap_C;
  /// Confidence level: the certificate may fail on a sample set of
  /// probability at most beta.
  double beta = 0.05;
  /// Number of modes m of the hidden system (known, although the mode of
  /// each observation is not).
  std::size_t modes = 1;
  SolveOptions solve;
  /// Recorded in the certificate for provenance.
  std::uint64_t seed = 0;
};

enum class CertStatus { Certified, BoundUndefined, FeasibilityUncertain };

inline std::string to_string(CertStatus s) {
  switch (s) {
    case CertStatus::Certified: return "Certified";
    case CertStatus::BoundUndefined: return "BoundUndefined";
    case CertStatus::FeasibilityUncertain: return "FeasibilityUncertain";
  }
  return "?";
}

/// Probabilistic upper bound on the joint spectral radius.
struct JsrCertificate {
  int n = 0;
  std::size_t m = 0;
  std::size_t N = 0;
  std::size_t d = 0;
  double beta = 0.0;
  double cap_C = 0.0;
  /// eps with phi(eps, d-1, N) = beta.
  double eps = 0.0;
  /// eps with phi(eps, d, N) = beta (the weaker essential-set bound d + 1);
  /// absent when N == d.
  std::optional<double> eps_baseline;
  double gamma_star = 0.0;
  SymMatrix P_star = SymMatrix::identity(1);
  double kappa = 1.0;
  /// gamma* / sqrt(1 - I^-1(eps kappa / m; (d-1)/2, 1/2)), when defined.
  std::optional<double> bound;
  /// Same formula evaluated at eps_baseline.
  std::optional<double> baseline_bound;
  CertStatus status = CertStatus::Certified;
  /// Width of the final bisection bracket on lambda = gamma^2.
  double bracket_width = 0.0;
  std::uint64_t seed = 0;
  /// Smallest N making eps kappa / m < 1 at the current kappa, reported when
  /// the bound is undefined for that reason.
  std::optional<std::size_t> suggested_min_N;
};

/// Rank-one data term svec(v v^T).
inline Vector svec_outer(const Vector& v) {
  Vector out(static_cast<Eigen::Index>(svec_dim(static_cast<std::size_t>(v.size()))));
  svec_into(v * v.transpose(), out);
  return out;
}

/// Lyapunov-decrease constraint of one observation:
/// y^T P y <= gamma^2 x^T P x  <=>  <svec(y y^T), svec(P)> <= lambda <svec(x x^T), svec(P)>.
inline SampledConstraint lyapunov_constraint(const Observation& o) {
  return {svec_outer(o.y), svec_outer(o.x)};
}

/// Sampled quasi-linear problem over svec(P): X = {P >= I} ∩ {|P|_F <= C}.
inline QlpInstance build_qlp(const SampleSet& obs, double cap_C) {
  if (obs.n < 1) throw ParameterError("build_qlp: n must be positive");
  if (!(cap_C >= obs.n)) {
    throw ParameterError("build_qlp: Frobenius cap C = " + std::to_string(cap_C) + " is below n = " +
                         std::to_string(obs.n));
  }
  std::vector<SampledConstraint> constraints;
  constraints.reserve(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const Observation& o = obs.observations[i];
    if (o.x.size() != obs.n || o.y.size() != obs.n) {
      throw DimensionError("build_qlp: observation " + std::to_string(i) + " does not have dimension " +
                           std::to_string(obs.n));
    }
    constraints.push_back(lyapunov_constraint(o));
  }
  std::vector<ConvexSet> common{ConvexSet(ShiftedPsdCone{obs.n}), ConvexSet(FrobeniusBall{cap_C})};
  return QlpInstance(static_cast<int>(svec_dim(static_cast<std::size_t>(obs.n))), std::move(constraints),
                     std::move(common));
}

/// kappa(P) = sqrt(det(P) / lambda_min(P)^n).
inline double kappa(const SymMatrix& P) {
  const EigDecomposition e = sym_eig(P);
  const double lmin = e.eigenvalues(0);
  if (!(lmin > 0.0)) throw DomainError("kappa: P is not positive definite");
  double ratio = 1.0;
  for (Eigen::Index i = 0; i < e.eigenvalues.size(); ++i) ratio *= e.eigenvalues(i) / lmin;
  return std::sqrt(ratio);
}

/// Probabilistic JSR bound gamma / sqrt(1 - I^-1(eps kappa / m; (d-1)/2, 1/2));
/// nullopt where the expression is undefined (d = 1, or eps kappa / m >= 1).
inline std::optional<double> jsr_bound(double gamma, double eps, double kappa_value, std::size_t m,
                                       std::size_t d) {
  if (d < 2) return std::nullopt;
  const double arg = eps * kappa_value / static_cast<double>(m);
  if (!(arg < 1.0)) return std::nullopt;
  const double q = inv_reg_inc_beta(arg, (static_cast<double>(d) - 1.0) / 2.0, 0.5);
  const double denom = 1.0 - q;
  if (!(denom > 0.0)) return std::nullopt;
  return gamma / std::sqrt(denom);
}

namespace detail {

inline std::optional<std::size_t> suggest_min_samples(double beta, std::size_t d, double kappa_value, std::size_t m) {
  if (d < 2) return std::nullopt;
  auto ok = [&](std::size_t n) {
    const double eps = epsilon_for_confidence({beta, static_cast<long>(d) - 1, static_cast<long>(n)});
    return eps * kappa_value / static_cast<double>(m) < 1.0;
  };
  std::size_t hi = d;
  constexpr std::size_t kCap = std::size_t{1} << 31;
  while (!ok(hi)) {
    if (hi >= kCap) return std::nullopt;
    hi *= 2;
  }
  std::size_t lo = hi / 2 < d ? d - 1 : hi / 2;  // ok(lo) is false or lo < d
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (ok(mid)) hi = mid;
    else lo = mid;
  }
  return hi;
}

}  // namespace detail

struct CertificationRun {
  JsrCertificate certificate;
  QlpInstance instance;
  QlpSolution solution;
};

/// Full pipeline, also returning the sampled problem and its solution.
///
/// Bisects on gamma over [0, max_i |y_i| / |x_i|]; the top of that bracket
/// is feasible with P = I because |I|_F = sqrt(n) <= C.
inline CertificationRun certify_detailed(const SampleSet& obs, const CertConfig& cfg) {
  const int n = obs.n;
  const std::size_t d = svec_dim(static_cast<std::size_t>(n));
  const std::size_t N = obs.size();
  if (N < d) {
    throw PreconditionError("certify: requires N ≥ d = n(n+1)/2, got N = " + std::to_string(N) +
                            ", d = " + std::to_string(d));
  }
  if (cfg.modes < 1) throw ParameterError("certify: number of modes must be >= 1");
  if (!(cfg.beta > 0.0 && cfg.beta < 1.0)) throw ParameterError("certify: beta must lie in (0, 1)");
  const double cap = cfg.cap_C.value_or(10.0 * n);

  QlpInstance inst = build_qlp(obs, cap);
  double gamma_hi = 0.0;
  for (const Observation& o : obs.observations) {
    const double xn = o.x.norm();
    if (!(xn > 0.0)) throw ParameterError("certify: observation with x = 0");
    gamma_hi = std::max(gamma_hi, o.y.norm() / xn);
  }
  SolveOptions sopts = cfg.solve;
  sopts.bisect_on_root = true;
  if (gamma_hi > 0.0) sopts.lambda_hi = gamma_hi * gamma_hi;
  QlpSolution sol = solve(inst, sopts);

  JsrCertificate cert;
  cert.n = n;
  cert.m = cfg.modes;
  cert.N = N;
  cert.d = d;
  cert.beta = cfg.beta;
  cert.cap_C = cap;
  cert.seed = cfg.seed;
  cert.gamma_star = std::sqrt(sol.lambda_star);
  cert.P_star = SymMatrix(smat_raw(sol.x_star));
  cert.kappa = kappa(cert.P_star);
  cert.bracket_width = sol.bracket_width;
  cert.eps = epsilon_for_confidence({cfg.beta, static_cast<long>(d) - 1, static_cast<long>(N)});
  if (N >= d + 1) cert.eps_baseline = epsilon_for_confidence({cfg.beta, static_cast<long>(d), static_cast<long>(N)});
  cert.bound = jsr_bound(cert.gamma_star, cert.eps, cert.kappa, cfg.modes, d);
  if (cert.eps_baseline) {
    cert.baseline_bound = jsr_bound(cert.gamma_star, *cert.eps_baseline, cert.kappa, cfg.modes, d);
  }
  if (sol.status != SolveStatus::Optimal) {
    cert.status = CertStatus::FeasibilityUncertain;
  } else if (!cert.bound) {
    cert.status = CertStatus::BoundUndefined;
  } else {
    cert.status = CertStatus::Certified;
  }
  if (!cert.bound) cert.suggested_min_N = detail::suggest_min_samples(cfg.beta, d, cert.kappa, cfg.modes);
  return {std::move(cert), std::move(inst), std::move(sol)};
}

inline JsrCertificate certify(const SampleSet& obs, const CertConfig& cfg) {
  return certify_detailed(obs, cfg).certificate;
}

// ---------------------------------------------------------------------------
// Monte Carlo validation against a white-box system

struct ValidationOptions {
  std::size_t samples = 100;            // N per trial
  std::size_t trials = 100;
  std::size_t violation_samples = 2000;  // M fresh draws per trial
  int depth = 0;                         // K for the JSR bracket; 0 = largest with m^K <= 1e6, at most 8
  std::uint64_t seed = 0;
};

struct ValidationTrial {
  std::size_t trial = 0;
  double gamma_star = 0.0;
  double kappa = 1.0;
  std::optional<double> bound;
  /// Estimated violation probability; nullopt when the solve was uncertain
  /// (then counted as exceeding eps).
  std::optional<double> violation;
  bool bound_below_lower = false;
  bool violation_exceeds_eps = false;
  CertStatus status = CertStatus::Certified;
};

struct ValidationReport {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t d = 0;
  std::size_t N = 0;
  std::size_t trials = 0;
  std::size_t violation_samples = 0;
  double beta = 0.0;
  double eps = 0.0;
  /// phi(eps, d-1, N), the bound on both failure frequencies.
  double phi = 0.0;
  /// phi + 3 sqrt(phi (1 - phi) / trials).
  double threshold = 0.0;
  JsrBracket bracket;
  double bound_failure_frequency = 0.0;
  double violation_frequency = 0.0;
  bool bound_within_threshold = false;
  bool violation_within_threshold = false;
  std::uint64_t seed = 0;
  std::vector<ValidationTrial> rows;  // sorted by trial index
};

inline int default_bracket_depth(std::size_t m) {
  if (m <= 1) return 8;
  int k = 1;
  while (k < 8 && std::pow(static_cast<double>(m), k + 1) <= 1e6) ++k;
  return k;
}

/// Repeats the certification on independent sample sets of the white-box
/// system and counts (a) bounds below the brute-force lower JSR bound and
/// (b) sample sets whose estimated violation probability exceeds eps.
inline ValidationReport validate_certificate_montecarlo(const SwitchedSystem& sys, const CertConfig& cfg,
                                                        const ValidationOptions& vopts) {
  if (vopts.trials < 1) throw ParameterError("validate: trials must be >= 1");
  if (vopts.violation_samples < 1) throw ParameterError("validate: violation_samples must be >= 1");
  assert_no_barabanov(sys);

  CertConfig run_cfg = cfg;
  run_cfg.modes = sys.m();
  const int K = vopts.depth > 0 ? vopts.depth : default_bracket_depth(sys.m());

  ValidationReport rep;
  rep.n = static_cast<std::size_t>(sys.n());
  rep.m = sys.m();
  rep.d = svec_dim(rep.n);
  rep.N = vopts.samples;
  rep.trials = vopts.trials;
  rep.violation_samples = vopts.violation_samples;
  rep.beta = cfg.beta;
  rep.seed = vopts.seed;
  rep.bracket = jsr_bruteforce_bounds(sys, K);
  if (rep.N < rep.d) {
    throw PreconditionError("validate: requires N ≥ d = n(n+1)/2, got N = " + std::to_string(rep.N));
  }
  rep.eps = epsilon_for_confidence({cfg.beta, static_cast<long>(rep.d) - 1, static_cast<long>(rep.N)});
  rep.phi = phi(rep.eps, static_cast<long>(rep.d) - 1, static_cast<long>(rep.N));
  rep.threshold = rep.phi + 3.0 * std::sqrt(rep.phi * (1.0 - rep.phi) / static_cast<double>(rep.trials));
  rep.rows.resize(vopts.trials);

  const ConstraintSampler sampler = [&sys](Rng& rng) { return lyapunov_constraint(observe(sys, rng)); };
  parallel_for(vopts.trials, [&](std::size_t t) {
    Rng rng = Rng::derive(vopts.seed, t);
    const SampleSet obs = observe_many(sys, vopts.samples, rng);
    CertConfig trial_cfg = run_cfg;
    trial_cfg.seed = derive_seed(vopts.seed, t);
    const CertificationRun run = certify_detailed(obs, trial_cfg);
    ValidationTrial row;
    row.trial = t;
    row.gamma_star = run.certificate.gamma_star;
    row.kappa = run.certificate.kappa;
    row.bound = run.certificate.bound;
    row.status = run.certificate.status;
    row.bound_below_lower = row.bound && *row.bound < rep.bracket.lower;
    if (run.solution.status == SolveStatus::Optimal) {
      row.violation = estimate_violation_probability(run.solution, sampler, vopts.violation_samples, rng);
      row.violation_exceeds_eps = *row.violation > rep.eps;
    } else {
      row.violation_exceeds_eps = true;
    }
    rep.rows[t] = row;
  });

  std::size_t bound_fail = 0;
  std::size_t viol_fail = 0;
  for (const ValidationTrial& r : rep.rows) {
    bound_fail += r.bound_below_lower ? 1 : 0;
    viol_fail += r.violation_exceeds_eps ? 1 : 0;
  }
  rep.bound_failure_frequency = static_cast<double>(bound_fail) / static_cast<double>(rep.trials);
  rep.violation_frequency = static_cast<double>(viol_fail) / static_cast<double>(rep.trials);
  rep.bound_within_threshold = rep.bound_failure_frequency <= rep.threshold;
  rep.violation_within_threshold = rep.violation_frequency <= rep.threshold;
  return rep;
}

}  // namespace sjsr
