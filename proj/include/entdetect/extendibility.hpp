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

// k-symmetric extendibility: the Werner-state threshold and the X-state
// family used to show the 2-extendible set is not cylinder-like.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "entdetect/entanglement.hpp"
#include "entdetect/qstate.hpp"

namespace entdetect {

/// SWAP on C^d (x) C^d.
inline CMatrix swap_operator(int d) {
  const Index n = static_cast<Index>(d) * d;
  CMatrix s = CMatrix::Zero(n, n);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) s(i * d + j, j * d + i) = 1.0;
  return s;
}

/// Projector onto the symmetric (+1) or antisymmetric (-1) subspace.
inline CMatrix symmetric_projector(int d, int sign) {
  const Index n = static_cast<Index>(d) * d;
  return 0.5 * (CMatrix::Identity(n, n) + static_cast<double>(sign) *
                                              swap_operator(d));
}

/// U (x) U invariant state (1 + psi)/2 rho+ + (1 - psi)/2 rho-, where
/// rho+- are the normalized symmetric / antisymmetric projectors. The
/// parameter equals <SWAP>.
struct WernerState {
  double psi_minus = 0.0;
  int d = 2;

  WernerState(double psi, int dim) : psi_minus(psi), d(dim) {
    if (d < 2) throw InvalidParameter("WernerState: d must be >= 2");
    if (!(psi >= -1.0 && psi <= 1.0))
      throw InvalidParameter("WernerState: psi_minus outside [-1, 1]");
  }

  CMatrix matrix() const {
    const double dd = d;
    const double sym_dim = dd * (dd + 1) / 2;
    const double anti_dim = dd * (dd - 1) / 2;
    return (1.0 + psi_minus) / 2.0 * symmetric_projector(d, +1) / sym_dim +
           (1.0 - psi_minus) / 2.0 * symmetric_projector(d, -1) / anti_dim;
  }

  /// Only for qubit-power local dimensions (d = 2, 4, ...).
  DensityMatrix density() const { return DensityMatrix(matrix()); }
};

/// Exact U (x) U twirl: the Werner state with the same <SWAP>.
inline WernerState werner_twirl(const CMatrix &sigma, int d) {
  detail::require_dim(sigma.rows(), static_cast<Index>(d) * d, "werner_twirl");
  const double psi = (sigma * swap_operator(d)).trace().real();
  return WernerState(std::clamp(psi, -1.0, 1.0), d);
}

/// Monte-Carlo twirl: average of `samples` Haar U (x) U conjugations.
inline CMatrix werner_twirl_sampled(const CMatrix &sigma, int d, int samples,
                                   Rng &rng) {
  const Index n = static_cast<Index>(d) * d;
  detail::require_dim(sigma.rows(), n, "werner_twirl_sampled");
  CMatrix acc = CMatrix::Zero(n, n);
  for (int s = 0; s < samples; ++s) {
    const CMatrix u = haar_unitary(d, rng);
    const CMatrix uu = kron(u, u);
    acc += uu * sigma * uu.adjoint();
  }
  return acc / static_cast<double>(samples);
}

/// A Werner state on C^d (x) C^d is k-symmetric extendable iff
/// psi_minus >= -(d - 1)/k.
inline bool werner_k_extendable(double psi_minus, int d, int k) {
  if (d < 2) throw InvalidParameter("werner_k_extendable: d must be >= 2");
  if (k < 1) throw InvalidParameter("werner_k_extendable: k must be >= 1");
  const double threshold = -static_cast<double>(d - 1) / k;
  return psi_minus >= threshold - 1e-12;
}

/// Unnormalized X-state
///   [x 0 0 sqrt(xw); 0 y sqrt(yz) 0; 0 sqrt(yz) z 0; sqrt(xw) 0 0 w].
struct XStateParams {
  double x = 0, y = 0, z = 0, w = 0;

  void validate() const {
    if (!(x >= 0 && y >= 0 && z >= 0 && w >= 0))
      throw InvalidParameter(
          "XStateParams: weights must be nonnegative for a PSD state");
  }

  CMatrix matrix() const {
    validate();
    CMatrix m = CMatrix::Zero(4, 4);
    m(0, 0) = x;
    m(1, 1) = y;
    m(2, 2) = z;
    m(3, 3) = w;
    m(0, 3) = m(3, 0) = std::sqrt(x * w);
    m(1, 2) = m(2, 1) = std::sqrt(y * z);
    return m;
  }

  double trace() const { return x + y + z + w; }
};

/// (x - y)(w - z); positive iff the X-state has no 2-symmetric extension.
inline double xstate_extension_gap(const XStateParams &p) {
  p.validate();
  return (p.x - p.y) * (p.w - p.z);
}

inline bool xstate_not_two_extendable(const XStateParams &p) {
  return xstate_extension_gap(p) > 0.0;
}

struct ExtensionInequality {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool strict = false;

  bool holds() const { return strict ? lhs > rhs : lhs >= rhs; }
};

/// rho is not 2-extendable while rho + R (R = Z (x) I) is separable, hence
/// k-extendable for every k. Both states share every expectation value
/// orthogonal to R.
struct ExtensionCounterexample {
  XStateParams params;
  DensityMatrix rho;
  DensityMatrix rho_shifted;
  /// Z (x) I. In normalized form rho_shifted - rho = R / params.trace().
  Observable R;
  std::vector<ExtensionInequality> inequalities;
  double extension_gap = 0.0;
  double shifted_ppt_determinant = 0.0;
};

/// x = y + eps, z = y + 2, w = y + 2 + eps. Throws CertificateFailure naming
/// the first inequality that fails.
inline ExtensionCounterexample build_extension_counterexample(double y,
                                                              double epsilon) {
  if (!(y > 0.0)) throw InvalidParameter("extension counterexample: y <= 0");
  if (!(epsilon >= 0.0))
    throw InvalidParameter("extension counterexample: epsilon < 0");
  const XStateParams p{y + epsilon, y, y + 2.0, y + 2.0 + epsilon};
  const double xw = p.x * p.w;
  const double yz = p.y * p.z;
  std::vector<ExtensionInequality> ineq = {
      {"(x-y)(w-z) > 0", (p.x - p.y) * (p.w - p.z), 0.0, true},
      {"(x+1)(w-1) >= xw", (p.x + 1) * (p.w - 1), xw, false},
      {"xw >= yz", xw, yz, false},
      {"(y+1)(z-1) >= xw", (p.y + 1) * (p.z - 1), xw, false},
  };
  for (const auto &q : ineq)
    if (!q.holds())
      throw CertificateFailure("extension counterexample: inequality " +
                               q.name + " fails (" + std::to_string(q.lhs) +
                               " vs " + std::to_string(q.rhs) + ")");

  CMatrix r = CMatrix::Zero(4, 4);
  r.diagonal() << 1, 1, -1, -1;
  const double tr = p.trace();
  const CMatrix m = p.matrix();
  DensityMatrix rho(m / tr);
  DensityMatrix shifted(CMatrix((m + r) / tr));
  const double det = ppt_determinant(shifted);
  if (det < -1e-12)
    throw CertificateFailure(
        "extension counterexample: shifted state fails the PPT oracle (det " +
        std::to_string(det) + ")");
  return ExtensionCounterexample{p,
                                 std::move(rho),
                                 std::move(shifted),
                                 Observable(r),
                                 std::move(ineq),
                                 (p.x - p.y) * (p.w - p.z),
                                 det};
}

}  // namespace entdetect
