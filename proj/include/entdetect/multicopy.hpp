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

// Joint-measurement schemes for det(rho^{T_A}): one observable on four
// copies, and a hybrid of nine single-copy expectations plus one two-copy
// expectation.

#pragma once

#include <algorithm>
#include <array>
#include <numeric>
#include <vector>

#include "entdetect/entanglement.hpp"
#include "entdetect/qstate.hpp"

namespace entdetect {

/// Hermitian observable on r copies of a two-qubit system.
class MultiCopyObservable {
 public:
  MultiCopyObservable(int copies, CMatrix entries) : copies_(copies) {
    if (copies < 1) throw InvalidParameter("MultiCopyObservable: copies must be >= 1");
    Index dim = 1;
    for (int i = 0; i < copies; ++i) dim *= 4;
    detail::require_dim(entries.rows(), dim, "MultiCopyObservable");
    detail::require_square(entries, "MultiCopyObservable");
    if (hermitian_deviation(entries) > tol::kHermitian)
      throw InvalidParameter("MultiCopyObservable: not Hermitian");
    entries_ = hermitian_part(entries);
  }

  int copies() const noexcept { return copies_; }
  const CMatrix &entries() const noexcept { return entries_; }

  /// tr(W rho^{(x) r}).
  double expectation(const DensityMatrix &rho) const {
    detail::require_dim(rho.dim(), 4, "MultiCopyObservable::expectation");
    CMatrix power = rho.matrix();
    for (int i = 1; i < copies_; ++i) power = kron(power, rho.matrix());
    return entries_.cwiseProduct(power.transpose()).sum().real();
  }

 private:
  int copies_;
  CMatrix entries_;
};

namespace detail {

inline int permutation_sign(const std::vector<int> &p) {
  int inversions = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      if (p[i] > p[j]) ++inversions;
  return inversions % 2 ? -1 : 1;
}

/// Digits of a multi-index, most significant factor first.
inline std::vector<Index> digits(Index idx, Index d, int r) {
  std::vector<Index> out(static_cast<std::size_t>(r));
  for (int k = r - 1; k >= 0; --k) {
    out[static_cast<std::size_t>(k)] = idx % d;
    idx /= d;
  }
  return out;
}

inline Index undigits(const std::vector<Index> &ds, Index d) {
  Index idx = 0;
  for (const Index x : ds) idx = idx * d + x;
  return idx;
}

}  // namespace detail

/// (1/r!) sum_pi sgn(pi) P_pi on (C^d)^{(x) r}.
inline CMatrix antisymmetrizer(Index d, int r) {
  if (d < 1 || r < 1) throw InvalidParameter("antisymmetrizer: d, r must be >= 1");
  Index dim = 1;
  for (int i = 0; i < r; ++i) dim *= d;
  std::vector<int> perm(static_cast<std::size_t>(r));
  std::iota(perm.begin(), perm.end(), 0);
  double factorial = 1;
  for (int i = 2; i <= r; ++i) factorial *= i;
  CMatrix a = CMatrix::Zero(dim, dim);
  do {
    const double sign = detail::permutation_sign(perm);
    for (Index col = 0; col < dim; ++col) {
      const auto j = detail::digits(col, d, r);
      std::vector<Index> i(j.size());
      for (std::size_t k = 0; k < j.size(); ++k)
        i[k] = j[static_cast<std::size_t>(perm[k])];
      a(detail::undigits(i, d), col) += sign / factorial;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return a;
}

/// Partial transpose on the A qubit of every two-qubit factor.
inline CMatrix partial_transpose_all_a(const CMatrix &m, int r) {
  CMatrix out = CMatrix::Zero(m.rows(), m.cols());
  for (Index row = 0; row < m.rows(); ++row)
    for (Index col = 0; col < m.cols(); ++col) {
      if (m(row, col) == cplx(0.0)) continue;
      auto i = detail::digits(row, 4, r);
      auto j = detail::digits(col, 4, r);
      for (std::size_t k = 0; k < i.size(); ++k) {
        const Index ai = i[k] / 2, aj = j[k] / 2;
        i[k] = 2 * aj + i[k] % 2;
        j[k] = 2 * ai + j[k] % 2;
      }
      out(detail::undigits(i, 4), detail::undigits(j, 4)) = m(row, col);
    }
  return out;
}

/// W with tr(W rho^{(x)4}) = det(rho^{T_A}); built once.
inline const MultiCopyObservable &four_copy_det_observable() {
  static const MultiCopyObservable w(4, partial_transpose_all_a(antisymmetrizer(4, 4), 4));
  return w;
}

// ---------------------------------------------------------------------------
// Two-copy hybrid scheme. With Gamma = rho^{T_A} split as
//   [ Rb  s ]
//   [ s^+ T ],  Rb 3x3,
// det Gamma = T det Rb - s^+ adj(Rb) s. Rb comes from nine single-copy
// expectations, T = 1 - tr Rb, and the quadratic term in s is one two-copy
// expectation whose observable depends on Rb.

struct TwoCopyResult {
  double det_estimate = 0.0;
  int outcome_count = 0;
  /// T det(Rb) from the single-copy data.
  double known = 0.0;
  /// tr(O2 rho (x) rho).
  double joint = 0.0;
  CMatrix o2;
};

namespace detail {

inline CMatrix matrix_unit(Index i, Index j) {
  CMatrix e = CMatrix::Zero(4, 4);
  e(i, j) = 1.0;
  return e;
}

inline Eigen::Matrix3cd adjugate(const Eigen::Matrix3cd &m) {
  Eigen::Matrix3cd adj;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int r0 = (j + 1) % 3, r1 = (j + 2) % 3;
      const int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      adj(i, j) = m(r0, c0) * m(r1, c1) - m(r0, c1) * m(r1, c0);
    }
  return adj;
}

/// The nine Hermitian single-copy observables whose expectations give Rb.
struct BlockObservable {
  Index i, j;
  int kind;  // 0: diagonal, 1: real part, 2: imaginary part
  CMatrix op;
};

inline const std::vector<BlockObservable> &block_observables() {
  static const std::vector<BlockObservable> obs = [] {
    std::vector<BlockObservable> v;
    const auto pt = [](const CMatrix &m) {
      return partial_transpose_matrix(m, Subsystem::A);
    };
    for (Index i = 0; i < 3; ++i) v.push_back({i, i, 0, pt(matrix_unit(i, i))});
    for (Index i = 0; i < 3; ++i)
      for (Index j = i + 1; j < 3; ++j) {
        v.push_back({i, j, 1, pt((matrix_unit(i, j) + matrix_unit(j, i)) / 2.0)});
        v.push_back({i, j, 2, pt(kI * (matrix_unit(i, j) - matrix_unit(j, i)) / 2.0)});
      }
    return v;
  }();
  return obs;
}

inline Eigen::Matrix3cd measured_block(const DensityMatrix &rho) {
  Eigen::Matrix3cd rb = Eigen::Matrix3cd::Zero();
  for (const auto &o : block_observables()) {
    const double v = (o.op * rho.matrix()).trace().real();
    if (o.kind == 0)
      rb(o.i, o.i) = v;
    else if (o.kind == 1) {
      rb(o.i, o.j) += v;
      rb(o.j, o.i) += v;
    } else {
      // tr(Gamma i(E_ij - E_ji)/2) = Im(Gamma_ij)
      rb(o.i, o.j) += cplx(0, v);
      rb(o.j, o.i) -= cplx(0, v);
    }
  }
  return rb;
}

}  // namespace detail

inline TwoCopyResult two_copy_scheme(const DensityMatrix &rho) {
  detail::require_dim(rho.dim(), 4, "two_copy_scheme");
  const Eigen::Matrix3cd rb = detail::measured_block(rho);
  const double t = 1.0 - rb.trace().real();
  const Eigen::Matrix3cd adj = detail::adjugate(rb);
  CMatrix o2 = CMatrix::Zero(16, 16);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j)
      o2 -= adj(i, j) *
            kron(partial_transpose_matrix(detail::matrix_unit(i, 3), Subsystem::A),
                 partial_transpose_matrix(detail::matrix_unit(3, j), Subsystem::A));
  o2 = hermitian_part(o2);
  TwoCopyResult res;
  res.known = t * rb.determinant().real();
  res.joint = MultiCopyObservable(2, o2).expectation(rho);
  res.det_estimate = res.known + res.joint;
  res.outcome_count = static_cast<int>(detail::block_observables().size()) + 1;
  res.o2 = std::move(o2);
  return res;
}

/// True when rho and sigma share the measured block Rb (hence T) but differ
/// in the unmeasured column s: the single-copy data cannot tell them apart.
inline bool tomography_incompleteness_check(const DensityMatrix &rho,
                                            const DensityMatrix &sigma,
                                            double tolerance = 1e-12) {
  detail::require_dim(rho.dim(), 4, "tomography_incompleteness_check");
  detail::require_dim(sigma.dim(), 4, "tomography_incompleteness_check");
  const CMatrix a = partial_transpose_matrix(rho.matrix(), Subsystem::A);
  const CMatrix b = partial_transpose_matrix(sigma.matrix(), Subsystem::A);
  const bool same_block =
      (a.topLeftCorner(3, 3) - b.topLeftCorner(3, 3)).cwiseAbs().maxCoeff() <= tolerance;
  const bool same_corner = std::abs(a(3, 3) - b(3, 3)) <= tolerance;
  const bool s_differs =
      (a.topRightCorner(3, 1) - b.topRightCorner(3, 1)).cwiseAbs().maxCoeff() > tolerance;
  return same_block && same_corner && s_differs;
}

}  // namespace entdetect
