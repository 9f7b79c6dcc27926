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

#pragma once

#include <algorithm>
#include <cmath>

#include "entdetect/qstate.hpp"

namespace entdetect {

struct ConcurrenceResult {
  double value = 0.0;
  /// Square roots of the eigenvalues of rho (Y(x)Y) rho^* (Y(x)Y), i.e. the
  /// eigenvalues of the R-matrix, in decreasing order.
  Eigen::Vector4d spectrum = Eigen::Vector4d::Zero();
};

namespace detail {

inline const CMatrix &sigma_yy() {
  static const CMatrix yy = pauli_product(2, 2);
  return yy;
}

inline ConcurrenceResult concurrence_from_spectrum(Eigen::Vector4d lambda) {
  std::sort(lambda.data(), lambda.data() + 4, std::greater<>());
  ConcurrenceResult r;
  r.spectrum = lambda;
  r.value = std::clamp(lambda(0) - lambda(1) - lambda(2) - lambda(3), 0.0, 1.0);
  return r;
}

}  // namespace detail

/// Wootters concurrence. The R-matrix eigenvalues are obtained as the
/// singular values of sqrt(rho) (Y(x)Y) sqrt(rho)^*, whose Gram matrix is
/// sqrt(rho) rho~ sqrt(rho); this keeps the result accurate for pure states.
inline ConcurrenceResult concurrence(const DensityMatrix &rho) {
  detail::require_dim(rho.dim(), 4, "concurrence");
  const CMatrix s = sqrt_psd(rho.matrix());
  const CMatrix a = s * detail::sigma_yy() * s.conjugate();
  const Eigen::VectorXd sv = Eigen::JacobiSVD<CMatrix>(a).singularValues();
  return detail::concurrence_from_spectrum(Eigen::Vector4d(sv));
}

/// Concurrence from the eigenvalues of the non-Hermitian product
/// rho (Y(x)Y) rho^* (Y(x)Y). Loses accuracy near rank-deficient states
/// (square roots of round-off), so it serves as a cross-check.
inline ConcurrenceResult concurrence_product_eigen(const DensityMatrix &rho) {
  detail::require_dim(rho.dim(), 4, "concurrence");
  const CMatrix &yy = detail::sigma_yy();
  const CMatrix prod = rho.matrix() * yy * rho.matrix().conjugate() * yy;
  const Eigen::VectorXcd ev = Eigen::ComplexEigenSolver<CMatrix>(prod, false)
                                  .eigenvalues();
  Eigen::Vector4d lambda;
  for (int i = 0; i < 4; ++i) lambda(i) = std::sqrt(std::max(ev(i).real(), 0.0));
  return detail::concurrence_from_spectrum(lambda);
}

/// Concurrence from the Hermitian R-matrix
/// sqrt(sqrt(rho) rho~ sqrt(rho)); its eigenvalues are the square roots of
/// those of the inner product.
inline ConcurrenceResult concurrence_rmatrix(const DensityMatrix &rho) {
  detail::require_dim(rho.dim(), 4, "concurrence");
  const CMatrix &yy = detail::sigma_yy();
  const CMatrix s = sqrt_psd(rho.matrix());
  const CMatrix tilde = yy * rho.matrix().conjugate() * yy;
  const Eigen::VectorXd ev =
      Eigen::SelfAdjointEigenSolver<CMatrix>(hermitian_part(s * tilde * s),
                                             Eigen::EigenvaluesOnly)
          .eigenvalues()
          .cwiseMax(0.0)
          .cwiseSqrt();
  return detail::concurrence_from_spectrum(Eigen::Vector4d(ev));
}

/// det(M^{T_A}) for any 4x4 operator.
inline double ppt_determinant(const CMatrix &m) {
  const Eigen::Matrix4cd pt = partial_transpose_matrix(m, Subsystem::A);
  return pt.determinant().real();
}

inline double ppt_determinant(const DensityMatrix &rho) {
  detail::require_dim(rho.dim(), 4, "ppt_determinant");
  return ppt_determinant(rho.matrix());
}

enum class Verdict { Separable, Entangled, Boundary };

inline constexpr const char *to_string(Verdict v) {
  switch (v) {
    case Verdict::Separable:
      return "separable";
    case Verdict::Entangled:
      return "entangled";
    case Verdict::Boundary:
      return "boundary";
  }
  return "?";
}

struct EntanglementVerdict {
  Verdict verdict = Verdict::Boundary;
  /// det(rho^{T_A}); its sign is the verdict, its magnitude the margin.
  double determinant = 0.0;

  bool entangled() const noexcept { return verdict == Verdict::Entangled; }
};

inline constexpr double kMarginTol = 1e-10;

/// Two-qubit separability from the sign of det(rho^{T_A}). Determinants
/// within margin_tol of zero give Verdict::Boundary.
inline EntanglementVerdict is_entangled(const DensityMatrix &rho,
                                        double margin_tol = kMarginTol) {
  const double det = ppt_determinant(rho);
  EntanglementVerdict v;
  v.determinant = det;
  if (det < -margin_tol)
    v.verdict = Verdict::Entangled;
  else if (det > margin_tol)
    v.verdict = Verdict::Separable;
  else
    v.verdict = Verdict::Boundary;
  return v;
}

/// (1 - alpha) I/4 + alpha |Phi><Phi|, PSD for alpha in [-1/3, 1].
/// Separable exactly for alpha <= 1/3.
inline DensityMatrix isotropic_state(double alpha) {
  constexpr double lo = -1.0 / 3.0;
  if (!(alpha >= lo - 1e-15 && alpha <= 1.0))
    throw InvalidParameter("isotropic_state: alpha " + std::to_string(alpha) +
                           " outside [-1/3, 1]");
  const CVector phi = bell_phi_plus();
  const CMatrix m = (1.0 - alpha) / 4.0 * CMatrix::Identity(4, 4) +
              alpha * phi * phi.adjoint();
  return DensityMatrix(m);
}

/// |Psi> = (U (x) I)|Phi>.
inline CVector rotated_bell(const CMatrix &local_unitary) {
  return on_side(local_unitary, Subsystem::A) * bell_phi_plus();
}

/// tr(rho |Psi><Psi|) with |Psi> = (U (x) I)|Phi>. Exceeds 1/2 only for
/// entangled states.
inline double singlet_fraction(const DensityMatrix &rho,
                               const CMatrix &local_unitary) {
  detail::require_dim(rho.dim(), 4, "singlet_fraction");
  detail::require_dim(local_unitary.rows(), 2, "singlet_fraction");
  if (!is_unitary(local_unitary, 1e-10))
    throw InvalidParameter("singlet_fraction: local operator is not unitary");
  const CVector psi = rotated_bell(local_unitary);
  return (psi.adjoint() * rho.matrix() * psi)(0, 0).real();
}

}  // namespace entdetect
