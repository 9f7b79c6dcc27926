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

// Dense few-qubit state algebra: density matrices, observables, Pauli
// coordinates, partial trace / transpose, matrix functions, fidelity,
// seeded random states and the shared JSON schema.
//
// Qubit ordering is big-endian throughout: in a two-qubit index 2*a + b,
// a labels subsystem A and b labels subsystem B.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <json.hpp>
#include <random>
#include <unsupported/Eigen/KroneckerProduct>
#include <vector>

#include "entdetect/errors.hpp"

namespace entdetect {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

inline constexpr cplx kI{0.0, 1.0};

enum class Subsystem { A, B };

inline constexpr Subsystem other(Subsystem s) {
  return s == Subsystem::A ? Subsystem::B : Subsystem::A;
}

inline constexpr const char *to_string(Subsystem s) {
  return s == Subsystem::A ? "A" : "B";
}

namespace tol {
inline constexpr double kHermitian = 1e-12;
inline constexpr double kTrace = 1e-12;
/// Eigenvalues in [-kPsd, 0) are clamped; below that a matrix is rejected.
inline constexpr double kPsd = 1e-9;
inline constexpr double kEigenFloor = 1e-8;
}  // namespace tol

// ---------------------------------------------------------------------------
// Elementary matrices

/// sigma_0 = I, sigma_1 = X, sigma_2 = Y, sigma_3 = Z.
inline const Eigen::Matrix2cd &pauli(int i) {
  static const std::array<Eigen::Matrix2cd, 4> table = [] {
    std::array<Eigen::Matrix2cd, 4> p;
    p[0] << 1, 0, 0, 1;
    p[1] << 0, 1, 1, 0;
    p[2] << 0, -kI, kI, 0;
    p[3] << 1, 0, 0, -1;
    return p;
  }();
  if (i < 0 || i > 3) throw InvalidParameter("pauli index out of range");
  return table[static_cast<std::size_t>(i)];
}

inline CMatrix kron(const CMatrix &a, const CMatrix &b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

/// sigma_i (x) sigma_j.
inline CMatrix pauli_product(int i, int j) {
  return kron(pauli(i), pauli(j));
}

inline double hermitian_deviation(const CMatrix &m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline CMatrix hermitian_part(const CMatrix &m) {
  return (0.5 * (m + m.adjoint())).eval();
}

inline bool is_unitary(const CMatrix &u, double tolerance = 1e-10) {
  if (u.rows() != u.cols()) return false;
  const CMatrix d = u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols());
  return d.cwiseAbs().maxCoeff() <= tolerance;
}

namespace detail {

inline bool is_qubit_dim(Index dim) {
  return dim >= 2 && dim <= 256 && (dim & (dim - 1)) == 0;
}

inline void require_dim(Index actual, Index expected, const char *what) {
  if (actual != expected)
    throw DimensionError(static_cast<std::size_t>(expected),
                         static_cast<std::size_t>(actual), what);
}

inline void require_square(const CMatrix &m, const char *what) {
  if (m.rows() != m.cols())
    throw DimensionError(static_cast<std::size_t>(m.rows()),
                         static_cast<std::size_t>(m.cols()),
                         std::string(what) + " (non-square)");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Hermitian matrix functions

/// Applies f to the spectrum of a Hermitian matrix.
inline CMatrix hermitian_function(const CMatrix &m,
                                  const std::function<double(double)> &f) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(m));
  Eigen::VectorXd values = es.eigenvalues();
  for (Index i = 0; i < values.size(); ++i) values(i) = f(values(i));
  return es.eigenvectors() * values.asDiagonal() *
         es.eigenvectors().adjoint();
}

/// Square root of a PSD matrix. Eigenvalues below `floor` (relative to the
/// largest one) are treated as exact zeros.
inline CMatrix sqrt_psd(const CMatrix &m, double floor = 1e-14) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(m));
  const double top = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 0.0);
  Eigen::VectorXd values = es.eigenvalues();
  for (Index i = 0; i < values.size(); ++i)
    values(i) = values(i) > floor * top ? std::sqrt(values(i)) : 0.0;
  return es.eigenvectors() * values.asDiagonal() *
         es.eigenvectors().adjoint();
}

/// M^{-1/2} for a positive definite Hermitian M.
/// Throws SingularReducedState when an eigenvalue is <= floor.
inline CMatrix inv_sqrt(const CMatrix &m, double floor = tol::kEigenFloor) {
  detail::require_square(m, "inv_sqrt");
  if (hermitian_deviation(m) > tol::kHermitian)
    throw InvalidParameter("inv_sqrt: input is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(m));
  const double lowest = es.eigenvalues().minCoeff();
  if (lowest <= floor) throw SingularReducedState(lowest, floor);
  const Eigen::VectorXd values = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * values.asDiagonal() *
         es.eigenvectors().adjoint();
}

// ---------------------------------------------------------------------------
// States and observables

class DensityMatrix;

/// Hermitian operator. Construction validates Hermiticity to 1e-12.
class Observable {
 public:
  explicit Observable(const CMatrix &m) {
    detail::require_square(m, "Observable");
    if (hermitian_deviation(m) > tol::kHermitian)
      throw InvalidParameter("Observable: matrix is not Hermitian (deviation " +
                             std::to_string(hermitian_deviation(m)) + ")");
    m_ = hermitian_part(m);
  }

  const CMatrix &matrix() const noexcept { return m_; }
  Index dim() const noexcept { return m_.rows(); }
  double trace() const { return m_.trace().real(); }
  /// Hilbert-Schmidt norm sqrt(tr(O^2)).
  double hs_norm() const { return m_.norm(); }
  Eigen::VectorXd eigenvalues() const {
    return Eigen::SelfAdjointEigenSolver<CMatrix>(m_, Eigen::EigenvaluesOnly)
        .eigenvalues();
  }

  inline double expectation(const DensityMatrix &rho) const;

 private:
  CMatrix m_;
};

/// Hermitian, unit-trace, positive semidefinite matrix on 1..8 qubits.
class DensityMatrix {
 public:
  /// Strict constructor: the matrix must already satisfy every invariant
  /// (eigenvalues in [-1e-9, 0) are clamped to zero).
  explicit DensityMatrix(const CMatrix &m) : m_(validated(m)) {}

  /// Hermitizes and divides by the trace before validating.
  static DensityMatrix from_unnormalized(const CMatrix &m) {
    detail::require_square(m, "DensityMatrix");
    const double tr = m.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr))
      throw InvalidState("DensityMatrix: trace must be positive, got " +
                         std::to_string(tr));
    return DensityMatrix(hermitian_part(m) / tr);
  }

  static DensityMatrix pure(const CVector &ket) {
    const double n = ket.norm();
    if (!(n > 0.0)) throw InvalidState("DensityMatrix::pure: zero vector");
    const CVector v = ket / n;
    return from_unnormalized(v * v.adjoint());
  }

  static DensityMatrix maximally_mixed(Index dim) {
    return DensityMatrix(CMatrix::Identity(dim, dim) /
                         static_cast<double>(dim));
  }

  const CMatrix &matrix() const noexcept { return m_; }
  Index dim() const noexcept { return m_.rows(); }
  int num_qubits() const {
    int n = 0;
    for (Index d = dim(); d > 1; d >>= 1) ++n;
    return n;
  }
  cplx operator()(Index i, Index j) const { return m_(i, j); }

  double purity() const { return (m_ * m_).trace().real(); }

  Eigen::VectorXd eigenvalues() const {
    return Eigen::SelfAdjointEigenSolver<CMatrix>(m_, Eigen::EigenvaluesOnly)
        .eigenvalues();
  }

  /// (O rho O^dagger) / tr(...) for any operator O of matching size.
  DensityMatrix conjugated(const CMatrix &op) const {
    return from_unnormalized(op * m_ * op.adjoint());
  }

 private:
  static CMatrix validated(const CMatrix &m) {
    detail::require_square(m, "DensityMatrix");
    if (!detail::is_qubit_dim(m.rows()))
      throw InvalidState("DensityMatrix: dimension " +
                         std::to_string(m.rows()) +
                         " is not a power of two in [2, 256]");
    if (!m.allFinite()) throw InvalidState("DensityMatrix: non-finite entry");
    const double herm = hermitian_deviation(m);
    if (herm > tol::kHermitian)
      throw InvalidState("DensityMatrix: not Hermitian (deviation " +
                         std::to_string(herm) + ")");
    CMatrix h = hermitian_part(m);
    const double tr = h.trace().real();
    if (std::abs(tr - 1.0) > tol::kTrace)
      throw InvalidState("DensityMatrix: trace " + std::to_string(tr) +
                         " is not 1");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    const double lowest = es.eigenvalues().minCoeff();
    if (lowest < -tol::kPsd)
      throw InvalidState("DensityMatrix: negative eigenvalue " +
                         std::to_string(lowest));
    if (lowest < 0.0) {
      Eigen::VectorXd values = es.eigenvalues().cwiseMax(0.0);
      values /= values.sum();
      h = es.eigenvectors() * values.asDiagonal() *
          es.eigenvectors().adjoint();
    }
    return h;
  }

  CMatrix m_;
};

inline double Observable::expectation(const DensityMatrix &rho) const {
  detail::require_dim(rho.dim(), dim(), "Observable::expectation");
  return (m_ * rho.matrix()).trace().real();
}

/// Standard kets |0>, |1> and the Bell state (|00> + |11>)/sqrt(2).
inline CVector basis_ket(Index dim, Index k) {
  CVector v = CVector::Zero(dim);
  v(k) = 1.0;
  return v;
}

inline CVector bell_phi_plus() {
  CVector v = CVector::Zero(4);
  v(0) = v(3) = 1.0 / std::sqrt(2.0);
  return v;
}

inline DensityMatrix kron(const DensityMatrix &a, const DensityMatrix &b) {
  return DensityMatrix::from_unnormalized(kron(a.matrix(), b.matrix()));
}

// ---------------------------------------------------------------------------
// Pauli coordinates of two-qubit operators

/// Expectations tr(sigma_i (x) sigma_j rho) for (i, j) != (0, 0), stored at
/// index 4*i + j - 1.
struct PauliVector {
  std::array<double, 15> coeffs{};

  static constexpr int index(int i, int j) { return 4 * i + j - 1; }
  double &operator[](std::size_t k) { return coeffs[k]; }
  double operator[](std::size_t k) const { return coeffs[k]; }
};

/// The 15 non-identity two-qubit Pauli products in PauliVector order.
inline const std::vector<CMatrix> &pauli_basis15() {
  static const std::vector<CMatrix> basis = [] {
    std::vector<CMatrix> b;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (i != 0 || j != 0) b.push_back(pauli_product(i, j));
    return b;
  }();
  return basis;
}

inline PauliVector to_pauli(const CMatrix &m) {
  detail::require_dim(m.rows(), 4, "to_pauli");
  PauliVector p;
  const auto &basis = pauli_basis15();
  for (std::size_t k = 0; k < 15; ++k)
    p[k] = (basis[k] * m).trace().real();
  return p;
}

inline PauliVector to_pauli(const DensityMatrix &rho) {
  return to_pauli(rho.matrix());
}

/// (I + sum_k c_k P_k) / 4; not necessarily positive.
inline CMatrix pauli_to_matrix(const PauliVector &p) {
  CMatrix m = CMatrix::Identity(4, 4);
  const auto &basis = pauli_basis15();
  for (std::size_t k = 0; k < 15; ++k) m += p[k] * basis[k];
  return m / 4.0;
}

inline DensityMatrix from_pauli(const PauliVector &p) {
  return DensityMatrix(pauli_to_matrix(p));
}

// ---------------------------------------------------------------------------
// Partial operations on two qubits

/// Reduced 2x2 block of a 4x4 operator; works for any operator, not only
/// states.
inline Eigen::Matrix2cd partial_trace_matrix(const CMatrix &m,
                                             Subsystem keep) {
  detail::require_dim(m.rows(), 4, "partial_trace");
  detail::require_dim(m.cols(), 4, "partial_trace");
  Eigen::Matrix2cd r = Eigen::Matrix2cd::Zero();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int k = 0; k < 2; ++k) {
        if (keep == Subsystem::A)
          r(a, b) += m(2 * a + k, 2 * b + k);
        else
          r(a, b) += m(2 * k + a, 2 * k + b);
      }
  return r;
}

inline DensityMatrix partial_trace(const DensityMatrix &rho, Subsystem keep) {
  detail::require_dim(rho.dim(), 4, "partial_trace");
  return DensityMatrix(CMatrix(partial_trace_matrix(rho.matrix(), keep)));
}

inline CMatrix partial_transpose_matrix(const CMatrix &m, Subsystem side) {
  detail::require_dim(m.rows(), 4, "partial_transpose");
  detail::require_dim(m.cols(), 4, "partial_transpose");
  CMatrix r(4, 4);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) {
          // m(<a b|, |c d>)
          const cplx v = m(2 * a + b, 2 * c + d);
          if (side == Subsystem::A)
            r(2 * c + b, 2 * a + d) = v;
          else
            r(2 * a + d, 2 * c + b) = v;
        }
  return r;
}

inline Observable partial_transpose(const DensityMatrix &rho, Subsystem side) {
  return Observable(partial_transpose_matrix(rho.matrix(), side));
}

/// Embeds a single-qubit operator on the given side of a two-qubit space.
inline CMatrix on_side(const CMatrix &op, Subsystem side) {
  const CMatrix id = CMatrix::Identity(2, 2);
  return side == Subsystem::A ? kron(op, id) : kron(id, op);
}

/// Bloch vector (tr(rho X), tr(rho Y), tr(rho Z)) of a 2x2 operator.
inline Eigen::Vector3d bloch_vector(const CMatrix &m) {
  detail::require_dim(m.rows(), 2, "bloch_vector");
  return {(pauli(1) * m).trace().real(), (pauli(2) * m).trace().real(),
          (pauli(3) * m).trace().real()};
}

// ---------------------------------------------------------------------------
// Distances

inline double trace_norm_hermitian(const CMatrix &m) {
  return Eigen::SelfAdjointEigenSolver<CMatrix>(hermitian_part(m),
                                                Eigen::EigenvaluesOnly)
      .eigenvalues()
      .cwiseAbs()
      .sum();
}

inline double trace_distance(const DensityMatrix &a, const DensityMatrix &b) {
  detail::require_dim(b.dim(), a.dim(), "trace_distance");
  return 0.5 * trace_norm_hermitian(a.matrix() - b.matrix());
}

/// Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, evaluated as the
/// squared nuclear norm of sqrt(sigma) sqrt(rho).
inline double fidelity(const DensityMatrix &rho, const DensityMatrix &sigma) {
  detail::require_dim(sigma.dim(), rho.dim(), "fidelity");
  const CMatrix prod = sqrt_psd(sigma.matrix()) * sqrt_psd(rho.matrix());
  const double nuclear = Eigen::JacobiSVD<CMatrix>(prod).singularValues().sum();
  return std::clamp(nuclear * nuclear, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Randomness

/// SplitMix64 step, used to derive independent per-task seeds.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline CMatrix ginibre(Index rows, Index cols, Rng &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = cplx(normal(rng), normal(rng));
  return g;
}

/// Haar-random unitary via QR of a Ginibre matrix with the phase fix.
inline CMatrix haar_unitary(Index dim, Rng &rng) {
  const CMatrix g = ginibre(dim, dim, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ();
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index k = 0; k < dim; ++k) {
    const cplx d = r(k, k);
    q.col(k) *= std::abs(d) > 0 ? d / std::abs(d) : cplx(1.0);
  }
  return q;
}

inline DensityMatrix random_density_matrix(Index dim, Index rank, Rng &rng) {
  if (!detail::is_qubit_dim(dim))
    throw InvalidParameter("random_density_matrix: bad dimension " +
                           std::to_string(dim));
  if (rank < 1 || rank > dim)
    throw InvalidParameter("random_density_matrix: rank " +
                           std::to_string(rank) + " outside [1, " +
                           std::to_string(dim) + "]");
  const CMatrix g = ginibre(dim, rank, rng);
  return DensityMatrix::from_unnormalized(g * g.adjoint());
}

/// Hilbert-Schmidt induced measure for rank == dim; deterministic in seed.
inline DensityMatrix random_density_matrix(Index dim, Index rank,
                                           std::uint64_t seed) {
  Rng rng(seed);
  return random_density_matrix(dim, rank, rng);
}

// ---------------------------------------------------------------------------

/// (1 - eps)/dim * I + eps * |psi><psi|.
inline DensityMatrix make_pps(double epsilon, const DensityMatrix &pure) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw InvalidParameter("make_pps: epsilon must lie in [0, 1]");
  if (std::abs(pure.purity() - 1.0) > 1e-10)
    throw InvalidParameter("make_pps: reference state is not pure");
  const Index d = pure.dim();
  return DensityMatrix::from_unnormalized(
      (1.0 - epsilon) / static_cast<double>(d) * CMatrix::Identity(d, d) +
      epsilon * pure.matrix());
}

// ---------------------------------------------------------------------------
// JSON: {"dim": n, "re": [...], "im": [...]}, row-major.

inline nlohmann::json matrix_to_json(const CMatrix &m) {
  nlohmann::json re = nlohmann::json::array();
  nlohmann::json im = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      re.push_back(m(i, j).real());
      im.push_back(m(i, j).imag());
    }
  return {{"dim", m.rows()}, {"re", std::move(re)}, {"im", std::move(im)}};
}

inline CMatrix matrix_from_json(const nlohmann::json &j) {
  const auto dim = j.at("dim").get<Index>();
  const auto &re = j.at("re");
  const auto &im = j.at("im");
  if (dim < 1 || re.size() != static_cast<std::size_t>(dim * dim) ||
      im.size() != re.size())
    throw InvalidParameter("matrix JSON: arrays must have length dim^2");
  CMatrix m(dim, dim);
  for (Index i = 0; i < dim; ++i)
    for (Index k = 0; k < dim; ++k) {
      const auto idx = static_cast<std::size_t>(i * dim + k);
      m(i, k) = cplx(re[idx].get<double>(), im[idx].get<double>());
    }
  return m;
}

inline nlohmann::json to_json(const DensityMatrix &rho) {
  return matrix_to_json(rho.matrix());
}

inline DensityMatrix density_from_json(const nlohmann::json &j) {
  return DensityMatrix(matrix_from_json(j));
}

}  // namespace entdetect
