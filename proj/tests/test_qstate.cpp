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

#include <catch2/catch_amalgamated.hpp>

#include "entdetect/entanglement.hpp"
#include "entdetect/harness.hpp"
#include "entdetect/qstate.hpp"
#include "oracles.hpp"

using namespace entdetect;
using Catch::Matchers::WithinAbs;

namespace {

DensityMatrix product(const CVector &a, const CVector &b) {
  return DensityMatrix::pure(kron(CMatrix(a), CMatrix(b)));
}

CVector ket(cplx a, cplx b) {
  CVector v(2);
  v << a, b;
  return v;
}

double max_abs(const CMatrix &m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("DensityMatrix validation", "[qstate]") {
  CMatrix m = CMatrix::Identity(4, 4) / 4.0;
  REQUIRE_NOTHROW(DensityMatrix(m));

  CMatrix bad_trace = CMatrix::Identity(4, 4) / 3.0;
  REQUIRE_THROWS_AS(DensityMatrix(bad_trace), InvalidState);

  CMatrix not_herm = m;
  not_herm(0, 1) = cplx(0, 1e-6);
  REQUIRE_THROWS_AS(DensityMatrix(not_herm), InvalidState);

  CMatrix negative = CMatrix::Zero(2, 2);
  negative(0, 0) = 1.1;
  negative(1, 1) = -0.1;
  REQUIRE_THROWS_AS(DensityMatrix(negative), InvalidState);

  // Eigenvalues just below zero are clamped.
  CMatrix tiny = CMatrix::Zero(2, 2);
  tiny(0, 0) = 1.0 + 1e-10;
  tiny(1, 1) = -1e-10;
  const DensityMatrix clamped(tiny);
  REQUIRE(clamped.eigenvalues().minCoeff() >= 0.0);

  REQUIRE_THROWS_AS(DensityMatrix(CMatrix::Identity(3, 3) / 3.0), InvalidState);
}

TEST_CASE("partial_trace", "[qstate]") {
  const DensityMatrix bell = DensityMatrix::pure(bell_phi_plus());
  REQUIRE(max_abs(partial_trace(bell, Subsystem::A).matrix() -
                  CMatrix::Identity(2, 2) / 2.0) < 1e-15);

  const DensityMatrix prod = product(basis_ket(2, 0), basis_ket(2, 1));
  const CMatrix one = basis_ket(2, 1) * basis_ket(2, 1).adjoint();
  REQUIRE(max_abs(partial_trace(prod, Subsystem::B).matrix() - one) < 1e-15);

  const DensityMatrix rho = input_state(0.5);
  for (const auto keep : {Subsystem::A, Subsystem::B}) {
    const CMatrix expected =
        oracle::partial_trace(rho.matrix(), keep == Subsystem::A ? 0 : 1);
    REQUIRE(max_abs(partial_trace(rho, keep).matrix() - expected) < 1e-15);
  }

  REQUIRE_THROWS_AS(partial_trace(DensityMatrix::maximally_mixed(8), Subsystem::A),
                    DimensionError);

  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const auto a = random_density_matrix(2, 2, rng);
    const auto b = random_density_matrix(2, 2, rng);
    const auto ab = kron(a, b);
    REQUIRE(max_abs(partial_trace(ab, Subsystem::A).matrix() - a.matrix()) < 1e-14);
    REQUIRE(max_abs(partial_trace(ab, Subsystem::B).matrix() - b.matrix()) < 1e-14);
  }
}

TEST_CASE("partial_transpose", "[qstate]") {
  const auto mixed = DensityMatrix::maximally_mixed(4);
  REQUIRE(max_abs(partial_transpose(mixed, Subsystem::A).matrix() - mixed.matrix()) ==
          0.0);

  const DensityMatrix bell = DensityMatrix::pure(bell_phi_plus());
  Eigen::VectorXd ev = partial_transpose(bell, Subsystem::A).eigenvalues();
  std::sort(ev.data(), ev.data() + ev.size());
  REQUIRE_THAT(ev(0), WithinAbs(-0.5, 1e-12));
  for (int i = 1; i < 4; ++i) REQUIRE_THAT(ev(i), WithinAbs(0.5, 1e-12));

  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const auto rho = random_density_matrix(4, 4, rng);
    const CMatrix pt = partial_transpose(rho, Subsystem::A).matrix();
    REQUIRE(max_abs(pt - oracle::partial_transpose_a(rho.matrix())) < 1e-15);
    REQUIRE_THAT(pt.trace().real(), WithinAbs(1.0, 1e-12));
    REQUIRE(hermitian_deviation(pt) < 1e-12);
    REQUIRE(max_abs(partial_transpose_matrix(pt, Subsystem::A) - rho.matrix()) == 0.0);
    // T_B = (T_A)^T
    REQUIRE(max_abs(partial_transpose(rho, Subsystem::B).matrix() - pt.transpose()) <
            1e-15);
  }

  const auto a = random_density_matrix(2, 2, rng);
  const auto b = random_density_matrix(2, 2, rng);
  const CMatrix pt = partial_transpose(kron(a, b), Subsystem::A).matrix();
  REQUIRE(max_abs(pt - kron(CMatrix(a.matrix().transpose()), b.matrix())) < 1e-15);
  REQUIRE(Eigen::SelfAdjointEigenSolver<CMatrix>(pt).eigenvalues().minCoeff() > -1e-15);
}

TEST_CASE("fidelity", "[qstate]") {
  const DensityMatrix zero = DensityMatrix::pure(basis_ket(2, 0));
  const DensityMatrix one = DensityMatrix::pure(basis_ket(2, 1));
  const auto half = DensityMatrix::maximally_mixed(2);
  REQUIRE_THAT(fidelity(zero, zero), WithinAbs(1.0, 1e-12));
  REQUIRE_THAT(fidelity(zero, one), WithinAbs(0.0, 1e-12));
  REQUIRE_THAT(fidelity(half, zero), WithinAbs(0.5, 1e-12));
  REQUIRE_THAT(fidelity(zero, half), WithinAbs(0.5, 1e-12));

  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto r = random_density_matrix(2, 2, rng);
    const auto s = random_density_matrix(2, 2, rng);
    REQUIRE_THAT(fidelity(r, s),
                 WithinAbs(oracle::qubit_fidelity(r.matrix(), s.matrix()), 1e-10));
    REQUIRE_THAT(fidelity(r, s), WithinAbs(fidelity(s, r), 1e-10));
  }

  // Commuting inputs reduce to the classical overlap.
  CMatrix p = CMatrix::Zero(4, 4), q = CMatrix::Zero(4, 4);
  p.diagonal() << 0.1, 0.2, 0.3, 0.4;
  q.diagonal() << 0.4, 0.3, 0.2, 0.1;
  double bc = 0.0;
  for (int k = 0; k < 4; ++k) bc += std::sqrt(p(k, k).real() * q(k, k).real());
  REQUIRE_THAT(fidelity(DensityMatrix(p), DensityMatrix(q)), WithinAbs(bc * bc, 1e-12));

  for (int i = 0; i < 50; ++i) {
    const auto r = random_density_matrix(4, 4, rng);
    const auto s = random_density_matrix(4, 3, rng);
    const CMatrix u = haar_unitary(4, rng);
    REQUIRE_THAT(fidelity(r.conjugated(u), s.conjugated(u)),
                 WithinAbs(fidelity(r, s), 1e-10));
  }
  REQUIRE_THROWS_AS(fidelity(zero, DensityMatrix::maximally_mixed(4)), DimensionError);
}

TEST_CASE("inv_sqrt", "[qstate]") {
  const CMatrix half = CMatrix::Identity(2, 2) / 2.0;
  REQUIRE(max_abs(inv_sqrt(2.0 * half) - CMatrix::Identity(2, 2)) < 1e-15);

  CMatrix d = CMatrix::Zero(2, 2);
  d.diagonal() << 0.75, 0.25;
  REQUIRE(max_abs(inv_sqrt(2.0 * d) -
                  oracle::inv_sqrt_diag(Eigen::Vector2d(1.5, 0.5))) < 1e-14);
  REQUIRE_THAT(inv_sqrt(2.0 * d)(0, 0).real(), WithinAbs(std::sqrt(2.0 / 3.0), 1e-14));
  REQUIRE_THAT(inv_sqrt(2.0 * d)(1, 1).real(), WithinAbs(std::sqrt(2.0), 1e-14));

  CMatrix singular = CMatrix::Zero(2, 2);
  singular(0, 0) = 1.0;
  REQUIRE_THROWS_AS(inv_sqrt(singular), SingularReducedState);

  Rng rng(5);
  const auto rho = random_density_matrix(2, 2, rng);
  const CMatrix m = inv_sqrt(2.0 * rho.matrix());
  REQUIRE(max_abs(m * (2.0 * rho.matrix()) * m.adjoint() - CMatrix::Identity(2, 2)) <
          1e-12);
}

TEST_CASE("random_density_matrix", "[qstate]") {
  const auto a = random_density_matrix(4, 4, std::uint64_t{42});
  const auto b = random_density_matrix(4, 4, std::uint64_t{42});
  REQUIRE(max_abs(a.matrix() - b.matrix()) == 0.0);

  const auto pure = random_density_matrix(4, 1, std::uint64_t{9});
  REQUIRE_THAT(pure.purity(), WithinAbs(1.0, 1e-12));

  REQUIRE_THROWS_AS(random_density_matrix(4, 0, std::uint64_t{1}), InvalidParameter);
  REQUIRE_THROWS_AS(random_density_matrix(4, 5, std::uint64_t{1}), InvalidParameter);

  Rng rng(2024);
  CMatrix mean = CMatrix::Zero(4, 4);
  constexpr int n = 10000;
  for (int i = 0; i < n; ++i) mean += random_density_matrix(4, 4, rng).matrix();
  mean /= static_cast<double>(n);
  REQUIRE(max_abs(mean - CMatrix::Identity(4, 4) / 4.0) < 0.02);
}

TEST_CASE("make_pps", "[qstate]") {
  const DensityMatrix pure4 = DensityMatrix::pure(basis_ket(16, 0));
  REQUIRE(max_abs(make_pps(0.0, pure4).matrix() - CMatrix::Identity(16, 16) / 16.0) <
          1e-15);
  REQUIRE(max_abs(make_pps(1.0, pure4).matrix() - pure4.matrix()) < 1e-15);
  const double eps = 1e-5;
  REQUIRE_THAT(make_pps(eps, pure4)(0, 0).real(),
               WithinAbs((1.0 - eps) / 16.0 + eps, 1e-15));
  REQUIRE_THROWS_AS(make_pps(1.5, pure4), InvalidParameter);
  REQUIRE_THROWS_AS(make_pps(0.5, DensityMatrix::maximally_mixed(16)), InvalidParameter);
}

TEST_CASE("PauliVector round trip", "[qstate]") {
  Rng rng(77);
  for (int i = 0; i < 1000; ++i) {
    const auto rho = random_density_matrix(4, 1 + i % 4, rng);
    const auto back = from_pauli(to_pauli(rho));
    REQUIRE(max_abs(back.matrix() - rho.matrix()) < 1e-12);
  }
  const auto p = to_pauli(DensityMatrix::pure(bell_phi_plus()));
  REQUIRE_THAT(p[PauliVector::index(3, 3)], WithinAbs(1.0, 1e-15));
  REQUIRE_THAT(p[PauliVector::index(2, 2)], WithinAbs(-1.0, 1e-15));
  REQUIRE_THAT(p[PauliVector::index(1, 0)], WithinAbs(0.0, 1e-15));
}

TEST_CASE("DensityMatrix JSON round trip", "[qstate]") {
  const auto rho = random_density_matrix(4, 4, std::uint64_t{5});
  const auto j = to_json(rho);
  REQUIRE(j.at("dim") == 4);
  REQUIRE(j.at("re").size() == 16);
  const auto back = density_from_json(nlohmann::json::parse(j.dump()));
  REQUIRE(max_abs(back.matrix() - rho.matrix()) == 0.0);
  nlohmann::json broken = j;
  broken["re"].erase(0);
  REQUIRE_THROWS_AS(density_from_json(broken), InvalidParameter);
}

// ---------------------------------------------------------------------------

TEST_CASE("concurrence of the input-state components", "[entanglement]") {
  const DensityMatrix bell = DensityMatrix::pure(bell_phi_plus());
  REQUIRE_THAT(concurrence(bell).value, WithinAbs(1.0, 1e-10));

  const CVector phi1 = kron(CMatrix(ket(1.0, -kI)), CMatrix(ket(1.0, 1.0))) / 2.0;
  const CVector phi2 =
      kron(CMatrix(ket(1.0, 1.0)), CMatrix(ket(1.0, -2.0 * kI))) / std::sqrt(10.0);
  REQUIRE_THAT(concurrence(DensityMatrix::pure(phi1)).value, WithinAbs(0.0, 1e-10));
  REQUIRE_THAT(concurrence(DensityMatrix::pure(phi2)).value, WithinAbs(0.0, 1e-10));
  REQUIRE_THAT(concurrence(DensityMatrix::maximally_mixed(4)).value, WithinAbs(0.0, 1e-12));

  double prev = -1.0;
  for (const double lambda : {0.2, 0.3, 0.4, 0.5, 0.6, 0.7}) {
    const double c = concurrence(input_state(lambda)).value;
    REQUIRE(c > prev);
    prev = c;
  }
}

TEST_CASE("concurrence routes agree with each other and with closed forms",
          "[entanglement]") {
  Rng rng(101);
  for (int i = 0; i < 200; ++i) {
    const auto pure = random_density_matrix(4, 1, rng);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(pure.matrix());
    const CVector psi = es.eigenvectors().col(3);
    REQUIRE_THAT(concurrence(pure).value,
                 WithinAbs(oracle::pure_concurrence(psi), 1e-9));
  }
  // The eigenvalue routes take square roots of round-off on rank-deficient
  // states, so they only reach ~sqrt(eps) there.
  for (int i = 0; i < 300; ++i) {
    const auto rank = 1 + i % 4;
    const auto rho = random_density_matrix(4, rank, rng);
    const auto c = concurrence(rho);
    const double tol = rank == 4 ? 1e-9 : 1e-7;
    REQUIRE_THAT(concurrence_product_eigen(rho).value, WithinAbs(c.value, tol));
    REQUIRE_THAT(concurrence_rmatrix(rho).value, WithinAbs(c.value, tol));
    REQUIRE_THAT(concurrence_rmatrix(rho).value,
                 WithinAbs(concurrence_product_eigen(rho).value, tol));
    const auto &l = c.spectrum;
    REQUIRE(l(0) >= l(1));
    REQUIRE(l(1) >= l(2));
    REQUIRE(l(2) >= l(3));
    REQUIRE(l(3) >= 0.0);
    REQUIRE_THAT(c.value,
                 WithinAbs(std::max(0.0, l(0) - l(1) - l(2) - l(3)), 1e-12));
  }
  for (const double alpha : {-1.0 / 3.0, 0.0, 0.2, 1.0 / 3.0, 0.5, 0.9, 1.0})
    REQUIRE_THAT(concurrence(isotropic_state(alpha)).value,
                 WithinAbs(oracle::isotropic_concurrence(alpha), 1e-9));
}

TEST_CASE("concurrence is local-unitary invariant and zero on separable mixtures",
          "[entanglement]") {
  Rng rng(55);
  for (int i = 0; i < 100; ++i) {
    const auto rho = random_density_matrix(4, 4, rng);
    const CMatrix uv = kron(haar_unitary(2, rng), haar_unitary(2, rng));
    REQUIRE_THAT(concurrence(rho.conjugated(uv)).value,
                 WithinAbs(concurrence(rho).value, 1e-10));
  }
  for (int i = 0; i < 100; ++i) {
    const auto p1 = kron(random_density_matrix(2, 1, rng), random_density_matrix(2, 1, rng));
    const auto p2 = kron(random_density_matrix(2, 1, rng), random_density_matrix(2, 1, rng));
    const auto mix = DensityMatrix::from_unnormalized(p1.matrix() + p2.matrix());
    REQUIRE(concurrence(mix).value < 1e-8);
  }
}

TEST_CASE("ppt_determinant", "[entanglement]") {
  REQUIRE_THAT(ppt_determinant(DensityMatrix::maximally_mixed(4)),
               WithinAbs(1.0 / 256.0, 1e-15));
  REQUIRE_THAT(ppt_determinant(DensityMatrix::pure(bell_phi_plus())),
               WithinAbs(-1.0 / 16.0, 1e-14));
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto rho = random_density_matrix(4, 4, rng);
    REQUIRE_THAT(ppt_determinant(rho), WithinAbs(oracle::ppt_det(rho.matrix()), 1e-15));
    const auto prod = kron(random_density_matrix(2, 2, rng), random_density_matrix(2, 2, rng));
    REQUIRE(ppt_determinant(prod) >= -1e-16);
  }
}

TEST_CASE("is_entangled verdicts", "[entanglement]") {
  REQUIRE(is_entangled(input_state(0.7)).verdict == Verdict::Entangled);
  // rank-2 mixture of products: det(rho^T_A) = 0, never Entangled
  REQUIRE(is_entangled(input_state(0.0)).verdict != Verdict::Entangled);
  const CMatrix noisy = 0.9 * input_state(0.0).matrix() + 0.025 * CMatrix::Identity(4, 4);
  REQUIRE(is_entangled(DensityMatrix(noisy)).verdict == Verdict::Separable);
  REQUIRE(is_entangled(isotropic_state(1.0 / 3.0)).verdict == Verdict::Boundary);
  const auto v = is_entangled(input_state(0.7));
  REQUIRE(v.determinant == ppt_determinant(input_state(0.7)));
  REQUIRE(v.entangled());
}

TEST_CASE("criterion equivalence on random states", "[entanglement]") {
  Rng rng(1234);
  int disagreements = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto rho = random_density_matrix(4, 1 + i % 4, rng);
    const double det = ppt_determinant(rho);
    if (std::abs(det) < 1e-10) continue;
    if ((concurrence(rho).value > 1e-7) != (det < -1e-10)) ++disagreements;
  }
  REQUIRE(disagreements == 0);
}

TEST_CASE("isotropic_state", "[entanglement]") {
  REQUIRE(max_abs(isotropic_state(0.0).matrix() - CMatrix::Identity(4, 4) / 4.0) < 1e-15);
  const CVector phi = bell_phi_plus();
  REQUIRE(max_abs(isotropic_state(1.0).matrix() - phi * phi.adjoint()) < 1e-15);
  REQUIRE_THAT(ppt_determinant(isotropic_state(1.0 / 3.0)), WithinAbs(0.0, 1e-15));
  for (const double alpha : {-0.3, 0.1, 0.6}) {
    const auto rho = isotropic_state(alpha);
    REQUIRE(max_abs(partial_trace(rho, Subsystem::A).matrix() -
                    CMatrix::Identity(2, 2) / 2.0) < 1e-15);
    REQUIRE(max_abs(partial_trace(rho, Subsystem::B).matrix() -
                    CMatrix::Identity(2, 2) / 2.0) < 1e-15);
  }
  // Separable side of the threshold is alpha <= 1/3.
  REQUIRE(ppt_determinant(isotropic_state(0.3)) > 0.0);
  REQUIRE(ppt_determinant(isotropic_state(0.34)) < 0.0);
  REQUIRE_THROWS_AS(isotropic_state(1.01), InvalidParameter);
  REQUIRE_THROWS_AS(isotropic_state(-0.34), InvalidParameter);
}

TEST_CASE("singlet_fraction", "[entanglement]") {
  const CMatrix id = CMatrix::Identity(2, 2);
  REQUIRE_THAT(singlet_fraction(DensityMatrix::pure(bell_phi_plus()), id),
               WithinAbs(1.0, 1e-15));
  REQUIRE_THAT(singlet_fraction(isotropic_state(1.0 / 3.0), id), WithinAbs(0.5, 1e-15));
  REQUIRE_THROWS_AS(singlet_fraction(isotropic_state(0.5), 2.0 * id), InvalidParameter);

  Rng rng(99);
  std::vector<CMatrix> us;
  for (int i = 0; i < 100; ++i) us.push_back(haar_unitary(2, rng));
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    CMatrix mix = CMatrix::Zero(4, 4);
    const int terms = 1 + i % 4;
    for (int k = 0; k < terms; ++k)
      mix += kron(random_density_matrix(2, 1, rng), random_density_matrix(2, 1, rng)).matrix();
    const auto sep = DensityMatrix::from_unnormalized(mix);
    for (std::size_t k = 0; k < us.size(); ++k)
      worst = std::max(worst, singlet_fraction(sep, us[k]));
  }
  REQUIRE(worst <= 0.5 + 1e-9);
}
