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

// The adaptive local-filter protocol: filters F = 1/sqrt(2 rho_X), their
// singular decomposition into U diag(1, sqrt(1 - gamma)) V, execution either
// directly as a Kraus operator or through an ancilla controlled rotation with
// post-selection, the alternating protocol runner and the NMR gate checks.

#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "entdetect/optim.hpp"
#include "entdetect/qstate.hpp"

namespace entdetect {

/// Invertible single-qubit filter with F = scale * U * diag(1, sqrt(1-gamma)) * V.
struct FilterOp {
  Eigen::Matrix2cd F;
  Eigen::Matrix2cd U;
  Eigen::Matrix2cd V;
  double gamma = 0.0;
  /// Controlled-rotation angle 2 arccos(sqrt(1 - gamma)).
  double theta = 0.0;
  /// Largest singular value of F.
  double scale = 1.0;

  static FilterOp from_matrix(const Eigen::Matrix2cd &f) {
    Eigen::JacobiSVD<Eigen::Matrix2cd> svd(f, Eigen::ComputeFullU |
                                                  Eigen::ComputeFullV);
    const Eigen::Vector2d s = svd.singularValues();
    if (!(s(1) > 0.0) || !std::isfinite(s(0)))
      throw InvalidParameter("FilterOp: filter matrix is singular");
    FilterOp op;
    op.F = f;
    op.U = svd.matrixU();
    op.V = svd.matrixV().adjoint();
    op.scale = s(0);
    const double ratio = std::min(s(1) / s(0), 1.0);
    op.gamma = std::clamp(1.0 - ratio * ratio, 0.0, 1.0);
    op.theta = 2.0 * std::acos(ratio);
    return op;
  }

  static FilterOp identity() {
    return from_matrix(Eigen::Matrix2cd::Identity());
  }

  /// diag(1, sqrt(1 - gamma)).
  Eigen::Matrix2cd lambda() const {
    Eigen::Matrix2cd l = Eigen::Matrix2cd::Zero();
    l(0, 0) = 1.0;
    l(1, 1) = std::sqrt(1.0 - gamma);
    return l;
  }

  /// F rescaled to unit operator norm; the physically implementable Kraus
  /// operator U diag(1, sqrt(1-gamma)) V.
  Eigen::Matrix2cd kraus() const { return F / scale; }

  /// Filter equivalent to applying *this first and then `next`.
  FilterOp followed_by(const FilterOp &next) const {
    return from_matrix(next.F * F);
  }
};

/// F = (2 rho)^{-1/2} built from a measured marginal.
inline FilterOp filter_from_marginal(const DensityMatrix &marginal,
                                     double floor = tol::kEigenFloor) {
  detail::require_dim(marginal.dim(), 2, "filter_from_marginal");
  return FilterOp::from_matrix(
      Eigen::Matrix2cd(inv_sqrt(2.0 * marginal.matrix(), 2.0 * floor)));
}

/// Controlled rotation on (ancilla, system), ancilla most significant:
/// system |1> rotates the ancilla by R_{-y}(theta). Post-selecting the
/// ancilla on |0> leaves diag(1, sqrt(1 - gamma)) on the system.
inline Eigen::Matrix4cd ancilla_unitary(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw InvalidParameter("ancilla_unitary: gamma outside [0, 1]");
  const double c = std::sqrt(1.0 - gamma);
  const double s = std::sqrt(gamma);
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Zero();
  u(0, 0) = 1.0;
  u(1, 1) = c;
  u(1, 3) = s;
  u(2, 2) = 1.0;
  u(3, 1) = -s;
  u(3, 3) = c;
  return u;
}

enum class FilterPath { Direct, Ancilla };

struct FilterOutcome {
  DensityMatrix state;
  double success_prob = 0.0;
};

inline constexpr double kMinSuccessProb = 1e-10;

namespace detail {

/// Embeds a gate on (ancilla, system) into the ordering (ancilla, A, B).
inline CMatrix embed_ancilla_gate(const Eigen::Matrix4cd &g, Subsystem side) {
  CMatrix full = CMatrix::Zero(8, 8);
  for (int a1 = 0; a1 < 2; ++a1)
    for (int s1 = 0; s1 < 2; ++s1)
      for (int a0 = 0; a0 < 2; ++a0)
        for (int s0 = 0; s0 < 2; ++s0)
          for (int spectator = 0; spectator < 2; ++spectator) {
            const cplx v = g(2 * a1 + s1, 2 * a0 + s0);
            if (side == Subsystem::A)
              full(4 * a1 + 2 * s1 + spectator, 4 * a0 + 2 * s0 + spectator) = v;
            else
              full(4 * a1 + 2 * spectator + s1, 4 * a0 + 2 * spectator + s0) = v;
          }
  return full;
}

inline Eigen::Matrix4cd ancilla_circuit(const FilterOp &filter) {
  const Eigen::Matrix4cd pre =
      kron(Eigen::Matrix2cd::Identity(), filter.V);
  const Eigen::Matrix4cd post =
      kron(Eigen::Matrix2cd::Identity(), filter.U);
  return post * ancilla_unitary(filter.gamma) * pre;
}

}  // namespace detail

/// Applies the normalized filter on one side and renormalizes.
/// success_prob = tr(K rho K^dagger) with K = F / scale.
inline FilterOutcome apply_filter(const DensityMatrix &rho,
                                  const FilterOp &filter, Subsystem side,
                                  FilterPath path = FilterPath::Direct) {
  detail::require_dim(rho.dim(), 4, "apply_filter");
  CMatrix unnormalized;
  if (path == FilterPath::Direct) {
    const CMatrix k = on_side(filter.kraus(), side);
    unnormalized = k * rho.matrix() * k.adjoint();
  } else {
    const CMatrix g =
        detail::embed_ancilla_gate(detail::ancilla_circuit(filter), side);
    CMatrix in = CMatrix::Zero(8, 8);
    in.topLeftCorner(4, 4) = rho.matrix();  // |0><0|_ancilla (x) rho
    const CMatrix out = g * in * g.adjoint();
    unnormalized = out.topLeftCorner(4, 4);  // ancilla post-selected on |0>
  }
  const double p = unnormalized.trace().real();
  if (!(p > kMinSuccessProb)) throw PostSelectionImpossible(p);
  return {DensityMatrix::from_unnormalized(unnormalized), p};
}

// ---------------------------------------------------------------------------
// Protocol transcript

struct ProtocolStep {
  Subsystem side = Subsystem::A;
  FilterOp filter;
  /// Marginal of the other qubit, measured right after this filter.
  DensityMatrix measured_marginal;
  double success_prob = 1.0;
};

struct ProtocolTranscript {
  DensityMatrix initial_a;
  DensityMatrix initial_b;
  std::vector<ProtocolStep> steps;
  double cumulative_success = 1.0;

  const DensityMatrix &initial(Subsystem s) const {
    return s == Subsystem::A ? initial_a : initial_b;
  }
  std::size_t size() const { return steps.size(); }
  /// Number of recorded single-qubit marginals.
  std::size_t marginal_count() const { return 2 + steps.size(); }

  /// Checks alternation (A first) and the probability bookkeeping.
  void validate() const {
    double cumulative = 1.0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const Subsystem expected = i % 2 == 0 ? Subsystem::A : Subsystem::B;
      if (steps[i].side != expected)
        throw InvalidParameter("transcript: step " + std::to_string(i) +
                               " is on the wrong side");
      const double p = steps[i].success_prob;
      if (!(p > 0.0 && p <= 1.0 + 1e-12))
        throw InvalidParameter("transcript: step " + std::to_string(i) +
                               " success probability outside (0, 1]");
      cumulative *= p;
    }
    if (std::abs(cumulative - cumulative_success) > 1e-12 * std::max(1.0, cumulative))
      throw InvalidParameter("transcript: cumulative_success mismatch");
  }
};

using ReadoutModel = std::function<DensityMatrix(const DensityMatrix &)>;

struct ProtocolOptions {
  FilterPath path = FilterPath::Direct;
  /// Maps each true marginal to the recorded one; filters are designed from
  /// the recorded values. Identity when empty.
  ReadoutModel readout;
};

struct ProtocolRun {
  ProtocolTranscript transcript;
  /// Two-qubit state after each filter.
  std::vector<DensityMatrix> states;
};

inline ProtocolRun simulate_protocol(const DensityMatrix &rho0, int num_filters,
                                     const ProtocolOptions &options = {}) {
  detail::require_dim(rho0.dim(), 4, "run_protocol");
  if (num_filters < 0)
    throw InvalidParameter("run_protocol: negative filter count");
  const auto read = [&](const DensityMatrix &m) {
    return options.readout ? options.readout(m) : m;
  };

  ProtocolRun run{
      ProtocolTranscript{read(partial_trace(rho0, Subsystem::A)),
                         read(partial_trace(rho0, Subsystem::B)),
                         {},
                         1.0},
      {}};
  auto &tr = run.transcript;
  DensityMatrix current = rho0;
  DensityMatrix latest_a = tr.initial_a;
  DensityMatrix latest_b = tr.initial_b;

  for (int step = 0; step < num_filters; ++step) {
    const Subsystem side = step % 2 == 0 ? Subsystem::A : Subsystem::B;
    const DensityMatrix &design = side == Subsystem::A ? latest_a : latest_b;
    FilterOp filter = [&] {
      try {
        return filter_from_marginal(design);
      } catch (const SingularReducedState &e) {
        throw SingularReducedState(e.min_eigenvalue(), tol::kEigenFloor, step);
      }
    }();
    FilterOutcome out = apply_filter(current, filter, side, options.path);
    DensityMatrix measured = read(partial_trace(out.state, other(side)));
    (side == Subsystem::A ? latest_b : latest_a) = measured;
    tr.cumulative_success *= out.success_prob;
    tr.steps.push_back(
        ProtocolStep{side, std::move(filter), std::move(measured), out.success_prob});
    current = out.state;
    run.states.push_back(std::move(out.state));
  }
  return run;
}

/// Alternating filters A, B, A, ... each designed from the latest marginal of
/// the side it acts on; after each filter the other qubit is measured.
inline ProtocolTranscript run_protocol(const DensityMatrix &rho0,
                                       int num_filters,
                                       const ProtocolOptions &options = {}) {
  return simulate_protocol(rho0, num_filters, options).transcript;
}

/// Replays a transcript from rho0, composing all filters applied so far on
/// each side into one packed operator per side (no ancilla reset needed).
/// Returns the two-qubit state after each step.
inline std::vector<DensityMatrix> replay_packed(
    const DensityMatrix &rho0, const ProtocolTranscript &transcript) {
  std::optional<FilterOp> packed_a, packed_b;
  std::vector<DensityMatrix> states;
  for (const auto &step : transcript.steps) {
    auto &slot = step.side == Subsystem::A ? packed_a : packed_b;
    slot = slot ? slot->followed_by(step.filter) : step.filter;
    const Eigen::Matrix2cd ka =
        packed_a ? packed_a->kraus() : Eigen::Matrix2cd::Identity();
    const Eigen::Matrix2cd kb =
        packed_b ? packed_b->kraus() : Eigen::Matrix2cd::Identity();
    states.push_back(rho0.conjugated(kron(ka, kb)));
  }
  return states;
}

/// max over sides of || rho_X - I/2 ||_1.
inline double marginal_deviation(const DensityMatrix &rho) {
  const CMatrix half = CMatrix::Identity(2, 2) / 2.0;
  return std::max(
      trace_norm_hermitian(partial_trace_matrix(rho.matrix(), Subsystem::A) - half),
      trace_norm_hermitian(partial_trace_matrix(rho.matrix(), Subsystem::B) - half));
}

struct ConvergenceRun {
  ProtocolTranscript transcript;
  /// marginal_deviation after each filter.
  std::vector<double> deviations;
  bool converged = false;
};

inline constexpr double kConvergenceTol = 1e-4;
inline constexpr int kMaxFilters = 50;

/// Runs the protocol until both marginals are within `tolerance` of I/2
/// (trace norm) or `max_filters` filters have been applied.
inline ConvergenceRun run_until_converged(const DensityMatrix &rho0,
                                          double tolerance = kConvergenceTol,
                                          int max_filters = kMaxFilters) {
  ConvergenceRun result{ProtocolTranscript{partial_trace(rho0, Subsystem::A),
                                           partial_trace(rho0, Subsystem::B),
                                           {},
                                           1.0},
                        {},
                        false};
  if (marginal_deviation(rho0) < tolerance) {
    result.converged = true;
    return result;
  }
  DensityMatrix current = rho0;
  for (int step = 0; step < max_filters; ++step) {
    const Subsystem side = step % 2 == 0 ? Subsystem::A : Subsystem::B;
    FilterOp filter;
    try {
      filter = filter_from_marginal(partial_trace(current, side));
    } catch (const SingularReducedState &e) {
      throw SingularReducedState(e.min_eigenvalue(), tol::kEigenFloor, step);
    }
    FilterOutcome out = apply_filter(current, filter, side);
    current = out.state;
    result.transcript.cumulative_success *= out.success_prob;
    result.transcript.steps.push_back(ProtocolStep{
        side, std::move(filter), partial_trace(current, other(side)),
        out.success_prob});
    const double dev = marginal_deviation(current);
    result.deviations.push_back(dev);
    if (dev < tolerance) {
      result.converged = true;
      break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// JSON: {initial_marginals: [A, B], steps: [{side, filter: {re, im},
// gamma, theta, marginal, success_prob}], cumulative_success}

inline nlohmann::json to_json(const ProtocolTranscript &t) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto &s : t.steps) {
    nlohmann::json filter = matrix_to_json(s.filter.F);
    steps.push_back({{"side", to_string(s.side)},
                     {"filter", {{"re", filter["re"]}, {"im", filter["im"]}}},
                     {"gamma", s.filter.gamma},
                     {"theta", s.filter.theta},
                     {"marginal", to_json(s.measured_marginal)},
                     {"success_prob", s.success_prob}});
  }
  return {{"initial_marginals",
           nlohmann::json::array({to_json(t.initial_a), to_json(t.initial_b)})},
          {"steps", std::move(steps)},
          {"cumulative_success", t.cumulative_success}};
}

inline ProtocolTranscript transcript_from_json(const nlohmann::json &j) {
  const auto &init = j.at("initial_marginals");
  if (init.size() != 2)
    throw InvalidParameter("transcript JSON: need two initial marginals");
  ProtocolTranscript t{density_from_json(init[0]), density_from_json(init[1]),
                       {}, j.at("cumulative_success").get<double>()};
  for (const auto &s : j.at("steps")) {
    const std::string side = s.at("side").get<std::string>();
    if (side != "A" && side != "B")
      throw InvalidParameter("transcript JSON: side must be A or B");
    nlohmann::json fm = {{"dim", 2}, {"re", s.at("filter").at("re")},
                         {"im", s.at("filter").at("im")}};
    FilterOp f = FilterOp::from_matrix(Eigen::Matrix2cd(matrix_from_json(fm)));
    if (std::abs(f.gamma - s.at("gamma").get<double>()) > 1e-10)
      throw InvalidParameter("transcript JSON: gamma inconsistent with filter");
    t.steps.push_back(ProtocolStep{side == "A" ? Subsystem::A : Subsystem::B,
                                   std::move(f),
                                   density_from_json(s.at("marginal")),
                                   s.at("success_prob").get<double>()});
  }
  t.validate();
  return t;
}

// ---------------------------------------------------------------------------
// NMR timing and gate decomposition checks

enum class PulseLayout { Normal, Swapped };

struct PulseTimings {
  double tau1 = 0.0;  // seconds
  double tau2 = 0.0;  // seconds; negative means the refocusing pulses move
  PulseLayout layout = PulseLayout::Normal;
};

/// Free-evolution times for two simultaneous controlled rotations with
/// couplings j_1a (ancilla 1 - A) and j_b2 (B - ancilla 2) in Hz.
inline PulseTimings pulse_timings(double theta1, double theta2, double j_1a,
                                  double j_b2) {
  if (j_1a == 0.0 || j_b2 == 0.0)
    throw InvalidParameter("pulse_timings: J coupling must be nonzero");
  const double pi = std::numbers::pi;
  PulseTimings t;
  t.tau1 = theta1 / (4 * pi * j_1a) + theta2 / (4 * pi * j_b2);
  t.tau2 = theta1 / (2 * pi * j_1a) - theta2 / (2 * pi * j_b2);
  t.layout = t.tau2 < 0 ? PulseLayout::Swapped : PulseLayout::Normal;
  return t;
}

/// How the J-coupling block U(theta / 2 pi J) is read: as exp(-i theta
/// Z1 ZA / 4) (the coupling Hamiltonian pi J/2 Z Z for time theta/(2 pi J)),
/// or as exp(-i theta Z1 ZA / 2).
enum class CouplingConvention { QuarterAngle, HalfAngle };

struct GateDecompositionReport {
  double gamma = 0.0;
  double theta = 0.0;
  /// Frobenius distance to the target before any phase correction.
  double raw_residual = 0.0;
  /// Distance after optimizing a global phase and tail Z rotations.
  double residual = 0.0;
  double global_phase = 0.0;
  double z_ancilla = 0.0;
  double z_system = 0.0;
  Eigen::Matrix4cd composed;
  bool exact() const { return residual < 1e-8; }
};

namespace detail {

inline Eigen::Matrix2cd rotation(int axis, double angle) {
  return (std::cos(angle / 2) * Eigen::Matrix2cd::Identity() -
          kI * std::sin(angle / 2) * pauli(axis))
      .eval();
}

}  // namespace detail

/// Composes R_{-x}(pi/2) U_J R_x(pi/2) R_{-y}(theta/2) on the ancilla (with
/// U_J the ZZ coupling block) and compares with ancilla_unitary(gamma) after
/// searching for a global phase and Z rotations on both qubits at the tail.
inline GateDecompositionReport verify_gate_decomposition(
    double gamma,
    CouplingConvention convention = CouplingConvention::QuarterAngle) {
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw InvalidParameter("verify_gate_decomposition: gamma outside [0, 1)");
  const double theta = 2.0 * std::acos(std::sqrt(1.0 - gamma));
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
  const double zz_angle =
      convention == CouplingConvention::QuarterAngle ? theta / 4 : theta / 2;
  // exp(-i a Z(x)Z) is diagonal with phases e^{-i a}, e^{+i a}, e^{+i a}, e^{-i a}
  Eigen::Matrix4cd zz = Eigen::Matrix4cd::Zero();
  const cplx em = std::exp(-kI * zz_angle);
  const cplx ep = std::exp(kI * zz_angle);
  zz.diagonal() << em, ep, ep, em;

  const Eigen::Matrix4cd g = kron(detail::rotation(1, -std::numbers::pi / 2), id) *
                             zz *
                             kron(detail::rotation(1, std::numbers::pi / 2), id) *
                             kron(detail::rotation(2, -theta / 2), id);
  const Eigen::Matrix4cd target = ancilla_unitary(gamma);

  GateDecompositionReport rep;
  rep.gamma = gamma;
  rep.theta = theta;
  rep.composed = g;
  rep.raw_residual = (target - g).norm();

  // ||T - e^{i phi} D G||_F^2 = 8 - 2 Re(e^{i phi} tr(T^dag D G)); phi
  // optimal in closed form.
  const auto overlap = [&](double a, double b) -> cplx {
    const Eigen::Matrix4cd d = kron(detail::rotation(3, a), detail::rotation(3, b));
    return (target.adjoint() * d * g).trace();
  };
  const auto loss = [&](const Eigen::VectorXd &v) {
    return std::max(8.0 - 2.0 * std::abs(overlap(v(0), v(1))), 0.0);
  };
  Eigen::VectorXd best = Eigen::VectorXd::Zero(2);
  double best_loss = loss(best);
  constexpr int kGrid = 16;
  for (int i = 0; i < kGrid; ++i)
    for (int k = 0; k < kGrid; ++k) {
      Eigen::VectorXd v(2);
      v << 4 * std::numbers::pi * i / kGrid, 4 * std::numbers::pi * k / kGrid;
      const double l = loss(v);
      if (l < best_loss) {
        best_loss = l;
        best = v;
      }
    }
  const auto refined = optim::nelder_mead(loss, best, 0.1, 1e-16);
  if (refined.value < best_loss) {
    best = refined.x;
    best_loss = refined.value;
  }
  const cplx ov = overlap(best(0), best(1));
  rep.z_ancilla = best(0);
  rep.z_system = best(1);
  rep.global_phase = -std::arg(ov);
  const Eigen::Matrix4cd d = kron(detail::rotation(3, best(0)), detail::rotation(3, best(1)));
  rep.residual = (target - std::exp(kI * rep.global_phase) * d * g).norm();
  return rep;
}

}  // namespace entdetect
