#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scenario_jsr/blackbox.hpp"
#include "scenario_jsr/certifier.hpp"
#include "scenario_jsr/errors.hpp"
#include "scenario_jsr/parallel.hpp"
#include "scenario_jsr/rng.hpp"

namespace sjsr {

/// (n-1) x n matrix B with B B^T = I and B 1 = 0: the first n-1 rows of the
/// Householder reflection that maps 1/sqrt(n) to e_n.
inline Matrix projection_matrix(int n) {
  if (n < 2) throw ParameterError("projection_matrix: n must be >= 2");
  Vector v = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  v(n - 1) -= 1.0;
  const Matrix H = Matrix::Identity(n, n) - (2.0 / v.squaredNorm()) * v * v.transpose();
  return H.topRows(n - 1);
}

/// m random row-stochastic n x n matrices. Every node keeps its self-loop;
/// each other directed edge is present with probability p_edge; a row
/// averages uniformly over its present edges.
inline SwitchedSystem random_row_stochastic(int n, std::size_t m, double p_edge, Rng& rng) {
  if (n < 1 || m < 1) throw ParameterError("random_row_stochastic: n and m must be positive");
  if (!(p_edge > 0.0 && p_edge <= 1.0)) throw ParameterError("random_row_stochastic: p_edge must lie in (0, 1]");
  std::vector<Matrix> modes;
  modes.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    Matrix A = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      std::vector<int> present;
      for (int j = 0; j < n; ++j) {
        if (j == i || rng.uniform() < p_edge) present.push_back(j);
      }
      const double w = 1.0 / static_cast<double>(present.size());
      double acc = 0.0;
      for (std::size_t e = 0; e + 1 < present.size(); ++e) {
        A(i, present[e]) = w;
        acc += w;
      }
      A(i, present.back()) = 1.0 - acc;
    }
    modes.push_back(std::move(A));
  }
  return SwitchedSystem(std::move(modes));
}

/// Modes B A_i B^T acting on the complement of the consensus direction.
inline SwitchedSystem project_system(const SwitchedSystem& sys, const Matrix& B) {
  std::vector<Matrix> modes;
  modes.reserve(sys.m());
  for (const Matrix& A : sys.modes()) modes.push_back(B * A * B.transpose());
  return SwitchedSystem(std::move(modes));
}

/// (x, y) -> (Bx, By) / |Bx|. Rescaling both by the same factor keeps
/// y' = (B A B^T) x' for row-stochastic A. Returns nullopt (redraw) when
/// |Bx| <= 1e-10, i.e. x is (nearly) parallel to 1.
inline std::optional<Observation> project_pair(const Vector& x, const Vector& y, const Matrix& B) {
  if (x.size() != B.cols() || y.size() != B.cols()) throw DimensionError("project_pair: dimension mismatch");
  const Vector bx = B * x;
  const double nrm = bx.norm();
  if (!(nrm > 1e-10)) return std::nullopt;
  return Observation{bx / nrm, (B * y) / nrm};
}

struct NetworkConfig {
  int n = 8;
  std::size_t m = 3;
  double beta = 0.05;
  std::vector<std::size_t> N_grid{500, 1000, 2000, 5000};
  std::uint64_t seed = 20210514;
  int K = 8;
  double p_edge = 0.5;
  /// Use A_i = I for every mode instead of random graphs.
  bool identity_modes = false;
  /// Frobenius cap; defaults to 10 (n - 1).
  std::optional<double> cap_C;
  SolveOptions solve;
};

struct SweepRow {
  std::size_t N = 0;
  std::optional<double> bound1;  // essential-set size d
  std::optional<double> bound2;  // baseline, essential-set size d + 1
  double gamma_star = 0.0;
  double kappa = 1.0;
  double whitebox_lower = 0.0;
  double whitebox_upper = 0.0;
  double eps1 = 0.0;
  std::optional<double> eps2;
  CertStatus status = CertStatus::Certified;
};

struct SweepResult {
  NetworkConfig config;
  SwitchedSystem hidden;     // original n x n modes
  SwitchedSystem projected;  // (n-1) x (n-1) modes
  JsrBracket bracket;
  /// Systems drawn until no projected mode was Barabanov.
  int draws = 0;
  std::vector<SweepRow> rows;
};

inline void validate(const NetworkConfig& cfg) {
  if (cfg.n < 2) throw ConfigError("consensus: n must be >= 2");
  if (cfg.m < 1) throw ConfigError("consensus: m must be >= 1");
  if (!(cfg.beta > 0.0 && cfg.beta < 1.0)) throw ConfigError("consensus: beta must lie in (0, 1)");
  if (cfg.N_grid.empty()) throw ConfigError("consensus: N grid is empty");
  const std::size_t d = svec_dim(static_cast<std::size_t>(cfg.n - 1));
  for (std::size_t i = 0; i < cfg.N_grid.size(); ++i) {
    if (i > 0 && cfg.N_grid[i] <= cfg.N_grid[i - 1]) throw ConfigError("consensus: N grid must be ascending");
    if (cfg.N_grid[i] < d) {
      throw ConfigError("consensus: every N must satisfy N ≥ d = " + std::to_string(d));
    }
  }
  if (cfg.K < 1) throw ConfigError("consensus: K must be >= 1");
  if (!(cfg.p_edge > 0.0 && cfg.p_edge <= 1.0)) throw ConfigError("consensus: p_edge must lie in (0, 1]");
}

/// Draws N observations of the hidden network and maps them onto the
/// complement of the consensus direction.
inline SampleSet observe_projected(const SwitchedSystem& hidden, const Matrix& B, std::size_t N, Rng& rng) {
  SampleSet out;
  out.n = static_cast<int>(B.rows());
  out.observations.reserve(N);
  while (out.observations.size() < N) {
    const Observation o = observe(hidden, rng);
    if (auto p = project_pair(o.x, o.y, B)) out.observations.push_back(std::move(*p));
  }
  return out;
}

/// Bound-versus-N sweep on a hidden switching network.
///
/// One hidden system is drawn from the seed (redrawn, at most 20 times, while
/// any projected mode is Barabanov); every N of the grid then gets its own
/// observation stream derived from (seed, row index).
inline SweepResult consensus_sweep(const NetworkConfig& cfg) {
  validate(cfg);
  constexpr int kMaxDraws = 20;
  const Matrix B = projection_matrix(cfg.n);
  Rng system_rng = Rng::derive(cfg.seed, 0);

  std::optional<SwitchedSystem> hidden;
  std::optional<SwitchedSystem> projected;
  int draws = 0;
  std::string last_reason;
  while (draws < kMaxDraws) {
    ++draws;
    SwitchedSystem candidate = cfg.identity_modes
                                   ? SwitchedSystem(std::vector<Matrix>(cfg.m, Matrix::Identity(cfg.n, cfg.n)))
                                   : random_row_stochastic(cfg.n, cfg.m, cfg.p_edge, system_rng);
    SwitchedSystem proj = project_system(candidate, B);
    try {
      assert_no_barabanov(proj);
    } catch (const BarabanovError& e) {
      last_reason = e.what();
      if (cfg.identity_modes) break;  // every redraw is identical
      continue;
    }
    hidden.emplace(std::move(candidate));
    projected.emplace(std::move(proj));
    break;
  }
  if (!hidden) {
    throw ConfigError("consensus: no admissible system after " + std::to_string(draws) + " draw(s): " + last_reason);
  }

  SweepResult result{cfg, *hidden, *projected, jsr_bruteforce_bounds(*projected, cfg.K), draws, {}};
  result.rows.resize(cfg.N_grid.size());

  CertConfig cert_cfg;
  cert_cfg.cap_C = cfg.cap_C;
  cert_cfg.beta = cfg.beta;
  cert_cfg.modes = cfg.m;
  cert_cfg.solve = cfg.solve;
  cert_cfg.seed = cfg.seed;

  parallel_for(cfg.N_grid.size(), [&](std::size_t r) {
    Rng rng = Rng::derive(cfg.seed, r + 1);
    const SampleSet obs = observe_projected(*hidden, B, cfg.N_grid[r], rng);
    const JsrCertificate cert = certify(obs, cert_cfg);
    SweepRow row;
    row.N = cfg.N_grid[r];
    row.bound1 = cert.bound;
    row.bound2 = cert.baseline_bound;
    row.gamma_star = cert.gamma_star;
    row.kappa = cert.kappa;
    row.whitebox_lower = result.bracket.lower;
    row.whitebox_upper = result.bracket.upper;
    row.eps1 = cert.eps;
    row.eps2 = cert.eps_baseline;
    row.status = cert.status;
    result.rows[r] = row;
  });
  return result;
}

}  // namespace sjsr
