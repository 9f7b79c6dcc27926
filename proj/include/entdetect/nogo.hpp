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

// Constructive side of the single-copy no-go statement: for any 14
// observables there is a separable state and an entangled state with
// identical expectations on all of them. Also a numerical probe of the
// adaptive argument that det((I/4 + tR)^{T_A}) cannot stay constant.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "entdetect/entanglement.hpp"
#include "entdetect/errors.hpp"
#include "entdetect/optim.hpp"
#include "entdetect/qstate.hpp"

namespace entdetect {

inline constexpr double kSeparableTol = 1e-12;
inline constexpr double kProjectionTol = 1e-10;

struct PairCertificates {
  double det_sep = 0.0;
  double det_ent = 0.0;
  /// Largest expectation difference over the probed observables (or, for a
  /// bare direction, the HS norm of rho_ent - rho_sep orthogonal to R).
  double projection_gap = 0.0;

  Verdict sep_verdict() const {
    return det_sep > kMarginTol ? Verdict::Separable : Verdict::Boundary;
  }
};

/// How the pair was found.
struct SearchDiagnostics {
  int phase = 1;  // 1: direct, 2: local conjugation, 3: randomized fallback
  double overlap = 0.0;
  double t_max = 0.0;
  double t_crossing = 0.0;
  int attempts = 0;
};

struct CounterexamplePair {
  Observable R;
  DensityMatrix rho_sep;
  double t = 0.0;
  DensityMatrix rho_ent;
  PairCertificates certificates;
  SearchDiagnostics diagnostics;
};

// ---------------------------------------------------------------------------

namespace detail {

inline Eigen::VectorXd pauli_coords(const CMatrix &m) {
  const auto p = to_pauli(m);
  return Eigen::Map<const Eigen::VectorXd>(p.coeffs.data(), 15);
}

inline CMatrix from_coords(const Eigen::VectorXd &c) {
  CMatrix m = CMatrix::Zero(4, 4);
  const auto &basis = pauli_basis15();
  for (std::size_t k = 0; k < 15; ++k) m += c(static_cast<Index>(k)) * basis[k];
  return m / 4.0;
}

inline Observable unit_traceless(const CMatrix &m, const char *what) {
  require_dim(m.rows(), 4, what);
  const CMatrix h = hermitian_part(m);
  const CMatrix r =
      h - (h.trace().real() / 4.0) * CMatrix::Identity(4, 4);
  const double n = r.norm();
  if (!(n > 1e-14))
    throw InvalidParameter(std::string(what) + ": direction is zero");
  return Observable(r / n);
}

inline void require_traceless(const Observable &r, const char *what) {
  if (std::abs(r.trace()) > 1e-10)
    throw InvalidParameter(std::string(what) + ": R must be traceless");
}

}  // namespace detail

/// The unit traceless direction orthogonal (Hilbert-Schmidt) to all 14
/// inputs. Sign fixed so the largest Pauli coefficient is positive.
inline Observable normal_direction(const std::vector<Observable> &observables) {
  Eigen::MatrixXd a(static_cast<Index>(observables.size()), 15);
  for (std::size_t i = 0; i < observables.size(); ++i) {
    detail::require_dim(observables[i].dim(), 4, "normal_direction");
    a.row(static_cast<Index>(i)) =
        detail::pauli_coords(observables[i].matrix()).transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto &sv = svd.singularValues();
  int rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-10 * std::max(1.0, sv(0))) ++rank;
  if (observables.size() != 14 || rank != 14) throw RankError(rank, 14);
  Eigen::VectorXd n = svd.matrixV().col(14);
  Index top = 0;
  n.cwiseAbs().maxCoeff(&top);
  if (n(top) < 0) n = -n;
  return detail::unit_traceless(detail::from_coords(n), "normal_direction");
}

// ---------------------------------------------------------------------------
// Overlap with maximally entangled states

struct EntangledOverlap {
  Eigen::Matrix2cd U;
  /// |<Psi|R|Psi>| at the maximizer.
  double value = 0.0;
  /// <Psi|R|Psi> with its sign.
  double signed_value = 0.0;
};

namespace detail {

/// exp(-i a Z/2) exp(-i b Y/2) exp(-i c Z/2)
inline Eigen::Matrix2cd zyz(double a, double b, double c) {
  const cplx ea = std::exp(cplx(0, -a / 2)), ec = std::exp(cplx(0, -c / 2));
  Eigen::Matrix2cd rz_a, ry, rz_c;
  rz_a << ea, 0, 0, std::conj(ea);
  rz_c << ec, 0, 0, std::conj(ec);
  ry << std::cos(b / 2), -std::sin(b / 2), std::sin(b / 2), std::cos(b / 2);
  return rz_a * ry * rz_c;
}

inline double bell_expectation(const CMatrix &r, const Eigen::Matrix2cd &u) {
  const CVector psi = rotated_bell(u);
  return (psi.adjoint() * r * psi)(0, 0).real();
}

}  // namespace detail

/// Maximizes |<Psi|R|Psi>| over |Psi> = (U (x) I)|Phi>: a 24^3 grid over
/// Z-Y-Z Euler angles, then restarted Nelder-Mead from the best grid points.
inline EntangledOverlap max_entangled_overlap(const Observable &r) {
  detail::require_dim(r.dim(), 4, "max_entangled_overlap");
  const CMatrix &m = r.matrix();
  const auto objective = [&](const Eigen::VectorXd &x) {
    return -std::abs(detail::bell_expectation(m, detail::zyz(x(0), x(1), x(2))));
  };
  constexpr int n = 24;
  constexpr std::size_t seeds = 6;
  constexpr double two_pi = 2 * std::numbers::pi;
  std::vector<std::pair<double, Eigen::Vector3d>> grid;
  grid.reserve(n * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Eigen::Vector3d x(two_pi * i / n, std::numbers::pi * (j + 0.5) / n,
                                two_pi * k / n);
        grid.emplace_back(objective(x), x);
      }
  std::partial_sort(grid.begin(), grid.begin() + seeds, grid.end(),
                    [](const auto &a, const auto &b) { return a.first < b.first; });
  Eigen::VectorXd x = grid.front().second;
  double best = grid.front().first;
  for (std::size_t s = 0; s < seeds; ++s) {
    Eigen::VectorXd start = grid[s].second;
    double step = 0.1;
    for (int round = 0; round < 4; ++round, step *= 0.3) {
      const auto res = optim::nelder_mead(objective, start, step, 1e-15, 2000);
      start = res.x;
      if (res.value < best) {
        best = res.value;
        x = res.x;
      }
    }
  }
  EntangledOverlap out;
  out.U = detail::zyz(x(0), x(1), x(2));
  out.signed_value = detail::bell_expectation(m, out.U);
  out.value = std::abs(out.signed_value);
  return out;
}

// ---------------------------------------------------------------------------
// Certificates

namespace detail {

/// Component of rho_ent - rho_sep orthogonal to R, in HS norm.
inline double orthogonal_gap(const CMatrix &delta, const CMatrix &r) {
  const double along = (r * delta).trace().real();
  return (delta - along * r).norm();
}

}  // namespace detail

/// Validates (rho_sep, rho_sep + tR) as a counterexample pair. Throws
/// CertificateFailure when any certificate fails and InvalidParameter for
/// t = 0.
inline CounterexamplePair certify_pair(const Observable &r,
                                       const DensityMatrix &rho_sep, double t) {
  detail::require_dim(r.dim(), 4, "certify_pair");
  detail::require_dim(rho_sep.dim(), 4, "certify_pair");
  detail::require_traceless(r, "certify_pair");
  if (t == 0.0)
    throw InvalidParameter("certify_pair: t = 0 gives identical states");
  if (std::abs(r.hs_norm() - 1.0) > 1e-12)
    throw InvalidParameter("certify_pair: R must have unit HS norm");
  const CMatrix ent = rho_sep.matrix() + t * r.matrix();
  const double lowest =
      Eigen::SelfAdjointEigenSolver<CMatrix>(ent, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();
  if (lowest < -tol::kPsd)
    throw CertificateFailure("certify_pair: rho_sep + tR is not PSD (min eigenvalue " +
                             std::to_string(lowest) + ")");
  DensityMatrix rho_ent{ent};
  PairCertificates c;
  c.det_sep = ppt_determinant(rho_sep);
  c.det_ent = ppt_determinant(rho_ent);
  c.projection_gap =
      detail::orthogonal_gap(rho_ent.matrix() - rho_sep.matrix(), r.matrix());
  if (c.det_sep < -kSeparableTol)
    throw CertificateFailure("certify_pair: det_sep = " + std::to_string(c.det_sep) +
                             " < 0, first state is entangled");
  if (!(c.det_ent < -kMarginTol))
    throw CertificateFailure("certify_pair: det_ent = " + std::to_string(c.det_ent) +
                             " is not below -1e-10");
  if (c.projection_gap > kProjectionTol)
    throw CertificateFailure("certify_pair: projection gap " +
                             std::to_string(c.projection_gap));
  return CounterexamplePair{r, rho_sep, t, std::move(rho_ent), c, {}};
}

// ---------------------------------------------------------------------------
// Search

inline constexpr double kBoundaryAlpha = 1.0 / 3.0 - 1e-6;

namespace detail {

/// Largest tau >= 0 with rho + tau*d PSD (rho full rank).
inline double max_psd_step(const CMatrix &rho, const CMatrix &d) {
  const CMatrix w = inv_sqrt(rho, 1e-14);
  const double mu =
      Eigen::SelfAdjointEigenSolver<CMatrix>(w * d * w, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();
  return mu < 0 ? -1.0 / mu : std::numeric_limits<double>::infinity();
}

struct LineResult {
  double t = 0.0;
  double t_max = 0.0;
  double t_crossing = 0.0;
};

/// From a separable full-rank rho, moves along sign*R past the determinant
/// crossing; returns the most negative-determinant step found.
inline std::optional<LineResult> line_search(const CMatrix &rho, const CMatrix &r,
                                             double sign) {
  const CMatrix d = sign * r;
  const double tmax = max_psd_step(rho, d);
  if (!std::isfinite(tmax)) return std::nullopt;
  const auto det_at = [&](double tau) { return ppt_determinant(CMatrix(rho + tau * d)); };
  const double hi_end = 0.95 * tmax;
  double best_tau = 0.0, best_det = det_at(0.0);
  constexpr int grid = 32;
  for (int k = 1; k <= grid; ++k) {
    const double tau = hi_end * k / grid;
    const double v = det_at(tau);
    if (v < best_det) {
      best_det = v;
      best_tau = tau;
    }
  }
  if (!(best_det < -10 * kMarginTol)) return std::nullopt;
  // Bisection on the determinant sign between the start and the best point.
  double lo = 0.0, hi = best_tau;
  for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (det_at(mid) < 0 ? hi : lo) = mid;
  }
  return LineResult{sign * best_tau, tmax, sign * hi};
}

inline std::optional<CounterexamplePair> try_certify(const Observable &r,
                                                     const DensityMatrix &rho,
                                                     double t) {
  try {
    return certify_pair(r, rho, t);
  } catch (const CertificateFailure &) {
    return std::nullopt;
  }
}

/// Phase 1 for unit R with a nonzero maximally-entangled overlap.
inline std::optional<CounterexamplePair> phase_one(const Observable &r,
                                                   SearchDiagnostics &diag) {
  const auto ov = max_entangled_overlap(r);
  diag.overlap = ov.value;
  if (ov.value <= 1e-6) return std::nullopt;
  const CMatrix u = on_side(ov.U, Subsystem::A);
  const DensityMatrix rho_sep{
      hermitian_part(u * isotropic_state(kBoundaryAlpha).matrix() * u.adjoint())};
  const auto line =
      line_search(rho_sep.matrix(), r.matrix(), ov.signed_value > 0 ? 1.0 : -1.0);
  if (!line) return std::nullopt;
  diag.t_max = line->t_max;
  diag.t_crossing = line->t_crossing;
  return try_certify(r, rho_sep, line->t);
}

/// Maps a pair found for S R S^dagger / norm back through S^{-1}.
inline std::optional<CounterexamplePair> pull_back(const Observable &r,
                                                   const CMatrix &s,
                                                   double norm,
                                                   const CounterexamplePair &p) {
  const CMatrix inv = s.inverse();
  const CMatrix sep = inv * p.rho_sep.matrix() * inv.adjoint();
  const double c = sep.trace().real();
  return try_certify(r, DensityMatrix(hermitian_part(sep / c)), p.t / (norm * c));
}

inline Eigen::Matrix2cd positive_filter(const Eigen::Vector3d &axis, double beta) {
  const Eigen::Vector3d m = axis.normalized();
  const Eigen::Matrix2cd ms = m(0) * pauli(1) + m(1) * pauli(2) + m(2) * pauli(3);
  return std::cosh(beta) * Eigen::Matrix2cd::Identity() + std::sinh(beta) * ms;
}

/// A unit vector orthogonal to v (any unit vector if v = 0).
inline Eigen::Vector3d orthogonal_axis(const Eigen::Vector3d &v) {
  if (v.norm() < 1e-12) return Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d e = std::abs(v(0)) < 0.9 * v.norm()
                                ? Eigen::Vector3d::UnitX()
                                : Eigen::Vector3d::UnitY();
  return v.cross(e).normalized();
}

/// Phase 2: R is (numerically) N (x) I + I (x) M. A positive filter on one
/// side that keeps the local part traceless creates a correlation term.
inline std::optional<CounterexamplePair> phase_two(const Observable &r,
                                                   SearchDiagnostics &diag) {
  const PauliVector p = to_pauli(r.matrix());
  Eigen::Vector3d n, m;
  for (int i = 1; i < 4; ++i) {
    n(i - 1) = p[PauliVector::index(i, 0)];
    m(i - 1) = p[PauliVector::index(0, i)];
  }
  // Filter the side opposite to the larger surviving local part.
  const bool on_a = m.norm() >= n.norm();
  const Eigen::Vector3d axis = orthogonal_axis(on_a ? n : m);
  for (const double beta : {0.5, 1.0, 0.25, 1.5}) {
    ++diag.attempts;
    const CMatrix s = on_side(positive_filter(axis, beta),
                              on_a ? Subsystem::A : Subsystem::B);
    const CMatrix rs = s * r.matrix() * s.adjoint();
    const double norm = rs.norm();
    SearchDiagnostics inner;
    const auto found =
        phase_one(unit_traceless(rs, "find_counterexample"), inner);
    diag.overlap = std::max(diag.overlap, inner.overlap);
    if (!found) continue;
    if (auto pair = pull_back(r, s, norm, *found)) {
      diag.t_max = inner.t_max;
      diag.t_crossing = inner.t_crossing;
      return pair;
    }
  }
  return std::nullopt;
}

/// Randomized fallback: boundary isotropic states pushed through random
/// local filters, stepping both ways along R.
inline std::optional<CounterexamplePair> phase_three(const Observable &r,
                                                     SearchDiagnostics &diag,
                                                     std::uint64_t seed) {
  Rng rng(seed);
  const CMatrix iso = isotropic_state(kBoundaryAlpha).matrix();
  for (int attempt = 0; attempt < 200; ++attempt) {
    ++diag.attempts;
    const CMatrix s = kron(CMatrix(ginibre(2, 2, rng)), CMatrix(ginibre(2, 2, rng)));
    const DensityMatrix rho = DensityMatrix::from_unnormalized(s * iso * s.adjoint());
    for (const double sign : {1.0, -1.0}) {
      const auto line = line_search(rho.matrix(), r.matrix(), sign);
      if (!line) continue;
      if (auto pair = try_certify(r, rho, line->t)) {
        diag.t_max = line->t_max;
        diag.t_crossing = line->t_crossing;
        return pair;
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Separable/entangled pair differing by a multiple of R. R is normalized to
/// unit HS norm; it must be traceless and nonzero.
inline CounterexamplePair find_counterexample(const Observable &r_in,
                                              std::uint64_t seed = 0xC0FFEE) {
  detail::require_dim(r_in.dim(), 4, "find_counterexample");
  detail::require_traceless(r_in, "find_counterexample");
  const Observable r = detail::unit_traceless(r_in.matrix(), "find_counterexample");
  SearchDiagnostics diag;
  auto found = detail::phase_one(r, diag);
  if (!found) {
    diag.phase = 2;
    found = detail::phase_two(r, diag);
  }
  if (!found) {
    diag.phase = 3;
    found = detail::phase_three(r, diag, seed);
  }
  if (!found)
    throw CertificateFailure(
        "find_counterexample: search exhausted (max entangled overlap " +
        std::to_string(diag.overlap) + ", attempts " + std::to_string(diag.attempts) +
        ")");
  found->diagnostics = diag;
  return *found;
}

/// normal_direction followed by find_counterexample; the projection gap is
/// recomputed on the 14 inputs themselves.
inline CounterexamplePair cylinder_test(const std::vector<Observable> &observables,
                                        std::uint64_t seed = 0xC0FFEE) {
  auto pair = find_counterexample(normal_direction(observables), seed);
  double gap = 0.0;
  for (const auto &o : observables)
    gap = std::max(gap, std::abs(o.expectation(pair.rho_ent) -
                                 o.expectation(pair.rho_sep)));
  pair.certificates.projection_gap = gap;
  if (gap > kProjectionTol)
    throw CertificateFailure("cylinder_test: projection gap " + std::to_string(gap));
  return pair;
}

// ---------------------------------------------------------------------------

struct ConstancyProbe {
  double t_star = 0.0;
  /// det((I/4 + t* R)^{T_A}) - 1/256, signed.
  double dev = 0.0;
};

inline std::vector<double> default_probe_grid() {
  std::vector<double> g;
  for (int k = 1; k <= 10; ++k) {
    g.push_back(0.01 * k);
    g.push_back(-0.01 * k);
  }
  return g;
}

/// The grid point where det((I/4 + tR)^{T_A}) deviates most from 1/256.
inline ConstancyProbe det_constancy_probe(const Observable &r,
                                          const std::vector<double> &t_grid =
                                              default_probe_grid()) {
  detail::require_dim(r.dim(), 4, "det_constancy_probe");
  detail::require_traceless(r, "det_constancy_probe");
  const CMatrix mixed = CMatrix::Identity(4, 4) / 4.0;
  ConstancyProbe best;
  for (const double t : t_grid) {
    const double dev =
        ppt_determinant(CMatrix(mixed + t * r.matrix())) - 1.0 / 256.0;
    if (std::abs(dev) > std::abs(best.dev)) best = {t, dev};
  }
  return best;
}

// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const CounterexamplePair &p) {
  return {
      {"R", matrix_to_json(p.R.matrix())},
      {"rho_sep", to_json(p.rho_sep)},
      {"rho_ent", to_json(p.rho_ent)},
      {"t", p.t},
      {"certificates",
       {{"det_sep", p.certificates.det_sep},
        {"sep_verdict", to_string(p.certificates.sep_verdict())},
        {"det_ent", p.certificates.det_ent},
        {"projection_gap", p.certificates.projection_gap}}},
      {"diagnostics",
       {{"phase", p.diagnostics.phase},
        {"overlap", p.diagnostics.overlap},
        {"t_max", p.diagnostics.t_max},
        {"t_crossing", p.diagnostics.t_crossing},
        {"attempts", p.diagnostics.attempts}}},
  };
}

}  // namespace entdetect
