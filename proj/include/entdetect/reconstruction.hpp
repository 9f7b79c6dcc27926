// Copyright 2026 The entdetect Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// State reconstruction from a filter-protocol transcript. The recorded
// filters are treated as fixed, known operators; a candidate input state is
// pushed through them and its simulated marginals are compared with the
// recorded ones. Five filters pin down a generic two-qubit state, i.e. the
// protocol data amount to full tomography.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <vector>

#include "entdetect/entanglement.hpp"
#include "entdetect/filter_protocol.hpp"
#include "entdetect/optim.hpp"
#include "entdetect/qstate.hpp"

namespace entdetect {

struct ConstraintOptions {
  /// Also match the recorded per-step success probabilities.
  bool use_success_probs = false;
};

namespace detail {

/// Transcript prefix lifted to 4x4 operators with its target data vector.
class PreparedTranscript {
 public:
  PreparedTranscript(const ProtocolTranscript &t, int prefix,
                     ConstraintOptions opts)
      : prefix_(prefix), opts_(opts) {
    if (prefix < 0 || static_cast<std::size_t>(prefix) > t.size())
      throw InvalidParameter("prefix " + std::to_string(prefix) +
                             " exceeds transcript length " +
                             std::to_string(t.size()));
    target_.resize(count());
    target_.segment<3>(0) = bloch_vector(t.initial_a.matrix());
    target_.segment<3>(3) = bloch_vector(t.initial_b.matrix());
    for (int i = 0; i < prefix; ++i) {
      const auto &s = t.steps[static_cast<std::size_t>(i)];
      sides_.push_back(s.side);
      lifted_.push_back(on_side(s.filter.kraus(), s.side));
      target_.segment<3>(6 + 3 * i) = bloch_vector(s.measured_marginal.matrix());
      if (opts_.use_success_probs) target_(6 + 3 * prefix + i) = s.success_prob;
    }
  }

  int count() const {
    return 6 + 3 * prefix_ + (opts_.use_success_probs ? prefix_ : 0);
  }
  const Eigen::VectorXd &target() const { return target_; }

  /// Simulated data for a unit-trace 4x4 candidate. Returns false when a
  /// filter annihilates the candidate.
  bool simulate(const Eigen::Matrix4cd &rho, Eigen::VectorXd &out) const {
    out.resize(count());
    out.segment<3>(0) = bloch_vector(partial_trace_matrix(rho, Subsystem::A));
    out.segment<3>(3) = bloch_vector(partial_trace_matrix(rho, Subsystem::B));
    Eigen::Matrix4cd cur = rho;
    for (int i = 0; i < prefix_; ++i) {
      const auto &k = lifted_[static_cast<std::size_t>(i)];
      cur = (k * cur * k.adjoint()).eval();
      const double p = cur.trace().real();
      if (!(p > kMinSuccessProb)) return false;
      cur /= p;
      out.segment<3>(6 + 3 * i) = bloch_vector(
          partial_trace_matrix(cur, other(sides_[static_cast<std::size_t>(i)])));
      if (opts_.use_success_probs) out(6 + 3 * prefix_ + i) = p;
    }
    return true;
  }

 private:
  int prefix_;
  ConstraintOptions opts_;
  std::vector<Subsystem> sides_;
  std::vector<Eigen::Matrix4cd> lifted_;
  Eigen::VectorXd target_;
};

}  // namespace detail

/// T T^dagger / tr(T T^dagger) for lower-triangular T holding 16 reals:
/// four real diagonal entries, then six complex entries below the diagonal.
inline Eigen::Matrix4cd cholesky_state(const Eigen::VectorXd &x) {
  detail::require_dim(x.size(), 16, "cholesky_state");
  Eigen::Matrix4cd t = Eigen::Matrix4cd::Zero();
  int k = 0;
  for (int i = 0; i < 4; ++i) t(i, i) = x(k++);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < i; ++j) {
      t(i, j) = cplx(x(k), x(k + 1));
      k += 2;
    }
  const Eigen::Matrix4cd m = t * t.adjoint();
  return m / m.trace().real();
}

/// Sum of squared deviations between the candidate's simulated marginal
/// Bloch vectors and the recorded ones (both initial marginals plus the
/// first `prefix` steps). +infinity when a filter annihilates the candidate.
inline double constraint_residual(const DensityMatrix &candidate,
                                  const ProtocolTranscript &transcript,
                                  int prefix, ConstraintOptions opts = {}) {
  detail::require_dim(candidate.dim(), 4, "constraint_residual");
  const detail::PreparedTranscript prepared(transcript, prefix, opts);
  Eigen::VectorXd sim;
  if (!prepared.simulate(candidate.matrix(), sim))
    return std::numeric_limits<double>::infinity();
  return (sim - prepared.target()).squaredNorm();
}

// ---------------------------------------------------------------------------
// Multi-start feasibility search

inline constexpr double kFeasibleResidual = 1e-8;

struct FeasibleEnsemble {
  std::vector<DensityMatrix> candidates;
  std::vector<double> residuals;
  int prefix_length = 0;
  int attempts = 0;

  std::size_t size() const { return candidates.size(); }
  /// Fewer than a tenth of the restarts reached the feasibility tolerance.
  bool sparse() const {
    return static_cast<int>(candidates.size()) * 10 < attempts;
  }
};

namespace detail {

struct LocalFit {
  Eigen::VectorXd x;
  double start_cost = 0.0;
  double cost = 0.0;
};

inline LocalFit fit_from(const PreparedTranscript &prepared,
                         const Eigen::VectorXd &x0, int max_evaluations) {
  const int m = prepared.count();
  const optim::ResidualFn fn = [&](const Eigen::VectorXd &x,
                                   Eigen::VectorXd &r) {
    Eigen::VectorXd sim;
    if (!prepared.simulate(cholesky_state(x), sim)) {
      r.setConstant(m, 1e3);
      return;
    }
    r = sim - prepared.target();
  };
  Eigen::VectorXd r0(m);
  fn(x0, r0);
  // LM stalls on its step-size test near rank-deficient optima; restarting
  // from the endpoint resets the trust region.
  auto res = optim::least_squares(fn, m, x0, max_evaluations);
  for (int round = 0; round < 8 && res.cost > 1e-24; ++round) {
    const auto next = optim::least_squares(fn, m, res.x, max_evaluations);
    const bool stalled = next.cost > 0.5 * res.cost;
    if (next.cost < res.cost) res = next;
    if (stalled) break;
  }
  return {res.x, r0.squaredNorm(), res.cost};
}

inline Eigen::VectorXd random_start(std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd x(16);
  for (int i = 0; i < 16; ++i) x(i) = normal(rng);
  return x;
}

}  // namespace detail

struct SearchOptions {
  ConstraintOptions constraints;
  int max_evaluations = 3000;
  double feasible_residual = kFeasibleResidual;
};

/// n independent local fits from random starts (seeds derived from `seed`);
/// keeps the fits whose residual is <= 1e-8.
inline FeasibleEnsemble feasible_states(const ProtocolTranscript &transcript,
                                        int prefix, int n, std::uint64_t seed,
                                        const SearchOptions &opts = {}) {
  if (n < 1) throw InvalidParameter("feasible_states: n must be >= 1");
  const detail::PreparedTranscript prepared(transcript, prefix, opts.constraints);
  FeasibleEnsemble ens;
  ens.prefix_length = prefix;
  ens.attempts = n;
  for (int i = 0; i < n; ++i) {
    const auto fit = detail::fit_from(
        prepared, detail::random_start(derive_seed(seed, static_cast<std::uint64_t>(i))),
        opts.max_evaluations);
    if (fit.cost <= opts.feasible_residual) {
      ens.candidates.push_back(DensityMatrix(CMatrix(cholesky_state(fit.x))));
      ens.residuals.push_back(fit.cost);
    }
  }
  return ens;
}

struct EnsembleSpread {
  double concurrence_min = 0.0;
  double concurrence_max = 0.0;
  double min_pairwise_fidelity = 1.0;
  double concurrence_spread() const { return concurrence_max - concurrence_min; }
};

inline EnsembleSpread ensemble_spread(const FeasibleEnsemble &ens) {
  EnsembleSpread s;
  if (ens.candidates.empty()) return s;
  s.concurrence_min = std::numeric_limits<double>::infinity();
  s.concurrence_max = -std::numeric_limits<double>::infinity();
  for (const auto &c : ens.candidates) {
    const double v = concurrence(c).value;
    s.concurrence_min = std::min(s.concurrence_min, v);
    s.concurrence_max = std::max(s.concurrence_max, v);
  }
  for (std::size_t i = 0; i < ens.size(); ++i)
    for (std::size_t j = i + 1; j < ens.size(); ++j)
      s.min_pairwise_fidelity = std::min(
          s.min_pairwise_fidelity, fidelity(ens.candidates[i], ens.candidates[j]));
  return s;
}

/// CSV: candidate_id,residual,concurrence,fidelity_to_reference
inline void write_ensemble_csv(std::ostream &os, const FeasibleEnsemble &ens,
                               const DensityMatrix &reference) {
  os << "candidate_id,residual,concurrence,fidelity_to_reference\n";
  os.precision(17);
  for (std::size_t i = 0; i < ens.size(); ++i)
    os << i << ',' << ens.residuals[i] << ',' << concurrence(ens.candidates[i]).value
       << ',' << fidelity(ens.candidates[i], reference) << '\n';
}

// ---------------------------------------------------------------------------
// Degrees of freedom

struct DofReport {
  int m = 0;
  int constraint_count = 0;
  /// 15 minus the numerical rank of the constraint Jacobian.
  int dof = 15;
  Eigen::VectorXd singular_values;
};

inline constexpr double kRankThreshold = 1e-7;

/// Rank of the constraint map's Jacobian with respect to the 15 Pauli
/// coordinates of the input, evaluated at rho0 by central differences.
inline DofReport dof_analysis(const ProtocolTranscript &transcript,
                              const DensityMatrix &rho0, int prefix,
                              ConstraintOptions opts = {}) {
  detail::require_dim(rho0.dim(), 4, "dof_analysis");
  const detail::PreparedTranscript prepared(transcript, prefix, opts);
  const PauliVector p0 = to_pauli(rho0);
  constexpr double h = 1e-6;
  Eigen::MatrixXd jac(prepared.count(), 15);
  Eigen::VectorXd plus, minus;
  for (int k = 0; k < 15; ++k) {
    PauliVector pp = p0, pm = p0;
    pp[static_cast<std::size_t>(k)] += h;
    pm[static_cast<std::size_t>(k)] -= h;
    if (!prepared.simulate(pauli_to_matrix(pp), plus) ||
        !prepared.simulate(pauli_to_matrix(pm), minus))
      throw InvalidParameter("dof_analysis: filters annihilate the state");
    jac.col(k) = (plus - minus) / (2 * h);
  }
  DofReport rep;
  rep.m = prefix;
  rep.constraint_count = prepared.count();
  rep.singular_values = Eigen::JacobiSVD<Eigen::MatrixXd>(jac).singularValues();
  int rank = 0;
  const double top = rep.singular_values.size() ? rep.singular_values(0) : 0.0;
  for (Eigen::Index i = 0; i < rep.singular_values.size(); ++i)
    if (rep.singular_values(i) > kRankThreshold * top) ++rank;
  rep.dof = 15 - rank;
  return rep;
}

// ---------------------------------------------------------------------------
// Maximum-likelihood reconstruction (Gaussian noise on Bloch components)

struct MleOptions {
  int restarts = 32;
  std::uint64_t seed = 0x5eed;
  SearchOptions search;
};

struct MleResult {
  DensityMatrix state;
  double residual = 0.0;
  /// Local degrees of freedom left by the data at the optimum.
  int dof = 0;
  /// Restarts whose residual reached the feasibility tolerance.
  int feasible_restarts = 0;
  /// False when the data leave free parameters (e.g. all-identity filters).
  bool determined() const { return dof == 0; }
};

inline MleResult mle_reconstruct(const ProtocolTranscript &transcript,
                                 const MleOptions &opts = {}) {
  if (transcript.size() < 5)
    throw InvalidParameter("mle_reconstruct: need at least 5 filter steps");
  if (opts.restarts < 1)
    throw InvalidParameter("mle_reconstruct: restarts must be >= 1");
  const int prefix = static_cast<int>(transcript.size());
  const detail::PreparedTranscript prepared(transcript, prefix,
                                            opts.search.constraints);
  double best_cost = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  bool progressed = false;
  int feasible = 0;
  for (int i = 0; i < opts.restarts; ++i) {
    const auto fit = detail::fit_from(
        prepared,
        detail::random_start(derive_seed(opts.seed, static_cast<std::uint64_t>(i))),
        opts.search.max_evaluations);
    if (!std::isfinite(fit.cost)) continue;
    if (fit.cost < fit.start_cost * (1 - 1e-12)) progressed = true;
    if (fit.cost <= opts.search.feasible_residual) ++feasible;
    if (fit.cost < best_cost) {
      best_cost = fit.cost;
      best_x = fit.x;
    }
  }
  if (best_x.size() == 0 || (!progressed && best_cost > opts.search.feasible_residual))
    throw ReconstructionError("mle_reconstruct: optimizer stagnated on every start",
                              best_cost);
  DensityMatrix state{CMatrix(cholesky_state(best_x))};
  const int dof = dof_analysis(transcript, state, prefix, opts.search.constraints).dof;
  return MleResult{std::move(state), best_cost, dof, feasible};
}

// ---------------------------------------------------------------------------

namespace detail {

/// Euclidean projection of v onto the probability simplex.
inline Eigen::VectorXd project_to_simplex(const Eigen::VectorXd &v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, shift = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumulative += u[k];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0) shift = t;
  }
  return (v.array() - shift).cwiseMax(0.0);
}

}  // namespace detail

/// Linear inversion of Pauli expectations followed by the Frobenius-nearest
/// projection onto unit-trace PSD matrices.
inline DensityMatrix linear_inversion_tomography(const PauliVector &expectations) {
  const CMatrix m = pauli_to_matrix(expectations);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
  const Eigen::VectorXd values = detail::project_to_simplex(es.eigenvalues());
  return DensityMatrix::from_unnormalized(es.eigenvectors() * values.asDiagonal() *
                                          es.eigenvectors().adjoint());
}

}  // namespace entdetect
