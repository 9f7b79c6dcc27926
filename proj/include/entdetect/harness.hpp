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

// Experiment drivers: the lambda family of input states, the noise model,
// concurrence bands under state-level noise and end-to-end protocol runs
// with readout noise followed by reconstruction.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "entdetect/entanglement.hpp"
#include "entdetect/filter_protocol.hpp"
#include "entdetect/qstate.hpp"
#include "entdetect/reconstruction.hpp"

namespace entdetect {

/// lambda |phi_B><phi_B| + (1 - lambda)(|phi_1><phi_1| + |phi_2><phi_2|)/2.
inline DensityMatrix input_state(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw InvalidParameter("input_state: lambda " + std::to_string(lambda) +
                           " outside [0, 1]");
  CVector bell = bell_phi_plus();
  CVector a0(2), a1(2), b0(2), b1(2);
  a0 << 1.0, -kI;
  a1 << 1.0, 1.0;
  b0 << 1.0, 1.0;
  b1 << 1.0, -2.0 * kI;
  const CVector phi1 = kron(a0, a1) / 2.0;
  const CVector phi2 = kron(b0, b1) / std::sqrt(10.0);
  const CMatrix m = lambda * bell * bell.adjoint() +
                    (1.0 - lambda) / 2.0 *
                        (phi1 * phi1.adjoint() + phi2 * phi2.adjoint());
  return DensityMatrix(hermitian_part(m));
}

// ---------------------------------------------------------------------------
// Noise

/// Error budget in trace distance.
struct NoiseModel {
  double total = 0.0579;
  double fitting = 0.0300;
  double gate = 0.0159;
  double decoherence = 0.0120;

  static NoiseModel zero() { return {0.0, 0.0, 0.0, 0.0}; }
  /// Single-component model with the given total, attributed to fitting.
  static NoiseModel uniform(double total) { return {total, total, 0.0, 0.0}; }

  void validate() const {
    for (const double v : {total, fitting, gate, decoherence})
      if (!(v >= 0.0 && v <= 1.0))
        throw InvalidParameter("NoiseModel: components must lie in [0, 1]");
    if (std::abs(fitting + gate + decoherence - total) > 1e-6)
      throw InvalidParameter("NoiseModel: components sum to " +
                             std::to_string(fitting + gate + decoherence) +
                             ", total is " + std::to_string(total));
  }
};

inline nlohmann::json to_json(const NoiseModel &m) {
  return {{"metric", "trace_distance"},
          {"total", m.total},
          {"fitting", m.fitting},
          {"gate", m.gate},
          {"decoherence", m.decoherence}};
}

inline NoiseModel noise_model_from_json(const nlohmann::json &j) {
  NoiseModel m;
  m.total = j.value("total", m.total);
  m.fitting = j.value("fitting", m.fitting);
  m.gate = j.value("gate", m.gate);
  m.decoherence = j.value("decoherence", m.decoherence);
  m.validate();
  return m;
}

/// (1 - delta) rho + delta tau with tau Hilbert-Schmidt random and delta
/// uniform in [0, min(1, radius / D(tau, rho))], so D(result, rho) <= radius.
inline DensityMatrix noise_sample(const DensityMatrix &rho, double radius, Rng &rng) {
  if (!(radius >= 0.0)) throw InvalidParameter("noise_sample: negative radius");
  if (radius == 0.0) return rho;
  const DensityMatrix tau = random_density_matrix(rho.dim(), rho.dim(), rng);
  const double d = trace_distance(tau, rho);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double delta = unit(rng) * (d > 0 ? std::min(1.0, radius / d) : 0.0);
  return DensityMatrix(hermitian_part((1.0 - delta) * rho.matrix() +
                                      delta * tau.matrix()));
}

inline DensityMatrix noise_sample(const DensityMatrix &rho, const NoiseModel &model,
                                  std::uint64_t seed) {
  model.validate();
  Rng rng(seed);
  return noise_sample(rho, model.total, rng);
}

// ---------------------------------------------------------------------------
// Concurrence band

inline std::vector<double> lambda_grid(int count, double lo = 0.1, double hi = 0.8) {
  if (count < 1) throw InvalidParameter("lambda_grid: count must be >= 1");
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    g[static_cast<std::size_t>(i)] =
        count == 1 ? lo : lo + (hi - lo) * i / static_cast<double>(count - 1);
  return g;
}

struct BandRow {
  double lambda = 0.0;
  double ideal = 0.0;
  double min = 0.0;
  /// 5, 25, 50, 75 and 95 % quantiles.
  std::array<double, 5> quantiles{};
  double max = 0.0;

  double width() const { return max - min; }
  bool contains(double c) const { return c >= min && c <= max; }
};

inline constexpr std::array<double, 5> kBandLevels{0.05, 0.25, 0.50, 0.75, 0.95};

/// Linear-interpolation quantile of sorted data.
inline double quantile(const std::vector<double> &sorted, double q) {
  if (sorted.empty()) throw InvalidParameter("quantile: empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline BandRow band_row(double lambda, int samples, double radius, std::uint64_t seed) {
  if (samples < 1) throw InvalidParameter("band_row: samples must be >= 1");
  const DensityMatrix rho = input_state(lambda);
  std::vector<double> c(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    c[static_cast<std::size_t>(s)] = concurrence(noise_sample(rho, radius, rng)).value;
  }
  std::sort(c.begin(), c.end());
  BandRow row;
  row.lambda = lambda;
  row.ideal = concurrence(rho).value;
  row.min = c.front();
  row.max = c.back();
  for (std::size_t k = 0; k < kBandLevels.size(); ++k)
    row.quantiles[k] = quantile(c, kBandLevels[k]);
  return row;
}

struct BandReport {
  NoiseModel model;
  std::uint64_t seed = 0;
  int samples_per_lambda = 0;
  std::vector<BandRow> rows;
};

/// Noise band over a uniform lambda grid on [0.1, 0.8] (full scale:
/// 200 x 2500; CI scale: 20 x 100).
inline BandReport concurrence_band(int lambda_count, int samples_per_lambda,
                                   const NoiseModel &model, std::uint64_t seed) {
  model.validate();
  if (samples_per_lambda < 1)
    throw InvalidParameter("concurrence_band: samples must be >= 1");
  BandReport rep{model, seed, samples_per_lambda, {}};
  const auto grid = lambda_grid(lambda_count);
  for (std::size_t i = 0; i < grid.size(); ++i)
    rep.rows.push_back(band_row(grid[i], samples_per_lambda, model.total,
                                derive_seed(seed, i)));
  return rep;
}

inline void write_band_csv(std::ostream &os, const BandReport &rep) {
  os.precision(12);
  os << "# noise metric: trace distance; total=" << rep.model.total
     << " fitting=" << rep.model.fitting << " gate=" << rep.model.gate
     << " decoherence=" << rep.model.decoherence << "; samples_per_lambda="
     << rep.samples_per_lambda << "; seed=" << rep.seed << '\n';
  os << "lambda,concurrence_ideal,band_min,q05,q25,q50,q75,q95,band_max\n";
  for (const auto &r : rep.rows) {
    os << r.lambda << ',' << r.ideal << ',' << r.min;
    for (const double q : r.quantiles) os << ',' << q;
    os << ',' << r.max << '\n';
  }
}

// ---------------------------------------------------------------------------
// Protocol experiment

struct ExperimentRow {
  double lambda = 0.0;
  double concurrence_ideal = 0.0;
  double concurrence_reconstructed = 0.0;
  /// fidelity(input, reconstruction).
  double fidelity = 0.0;
  double residual = 0.0;
  int dof = 0;
  BandRow band;
  bool in_band = false;
  /// Recorded vs. true marginal, for the two initial marginals and each step.
  std::vector<double> marginal_fidelities;
};

struct ExperimentReport {
  NoiseModel model;
  std::uint64_t seed = 0;
  std::vector<ExperimentRow> rows;
  double runtime_seconds = 0.0;

  std::vector<double> lambda_grid() const {
    std::vector<double> g;
    for (const auto &r : rows) g.push_back(r.lambda);
    return g;
  }
  double median_fidelity() const {
    std::vector<double> f;
    for (const auto &r : rows) f.push_back(r.fidelity);
    std::sort(f.begin(), f.end());
    return quantile(f, 0.5);
  }
};

struct ExperimentOptions {
  int filters = 5;
  int restarts = 32;
  int band_samples = 2500;
  FilterPath path = FilterPath::Direct;
};

/// Per lambda: run the filter protocol with readout noise of radius
/// model.fitting on every recorded marginal, reconstruct by maximum
/// likelihood and compare with the input. The band uses model.total.
inline ExperimentReport protocol_experiment(const std::vector<double> &lambdas,
                                            const NoiseModel &model,
                                            std::uint64_t seed,
                                            const ExperimentOptions &opts = {}) {
  model.validate();
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport rep{model, seed, {}, 0.0};
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double lambda = lambdas[i];
    const std::uint64_t base = derive_seed(seed, i);
    try {
      const DensityMatrix rho = input_state(lambda);
      ExperimentRow row;
      row.lambda = lambda;
      row.concurrence_ideal = concurrence(rho).value;

      Rng readout_rng(derive_seed(base, 0));
      ProtocolOptions popts;
      popts.path = opts.path;
      popts.readout = [&](const DensityMatrix &truth) {
        DensityMatrix noisy = noise_sample(truth, model.fitting, readout_rng);
        row.marginal_fidelities.push_back(fidelity(truth, noisy));
        return noisy;
      };
      const auto transcript = run_protocol(rho, opts.filters, popts);

      MleOptions mle;
      mle.restarts = opts.restarts;
      mle.seed = derive_seed(base, 1);
      const auto fit = mle_reconstruct(transcript, mle);
      row.concurrence_reconstructed = concurrence(fit.state).value;
      row.fidelity = fidelity(rho, fit.state);
      row.residual = fit.residual;
      row.dof = fit.dof;
      row.band = band_row(lambda, opts.band_samples, model.total, derive_seed(base, 2));
      row.in_band = row.band.contains(row.concurrence_reconstructed);
      rep.rows.push_back(std::move(row));
    } catch (const ReconstructionError &e) {
      throw ReconstructionError("lambda=" + std::to_string(lambda) + ": " + e.what(),
                                e.best_residual());
    } catch (const Error &e) {
      throw Error("lambda=" + std::to_string(lambda) + ": " + e.what());
    }
  }
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

inline void write_experiment_csv(std::ostream &os, const ExperimentReport &rep) {
  os.precision(12);
  os << "# noise metric: trace distance; readout radius=" << rep.model.fitting
     << " band radius=" << rep.model.total << "; seed=" << rep.seed << '\n';
  std::size_t marginals = 0;
  for (const auto &r : rep.rows)
    marginals = std::max(marginals, r.marginal_fidelities.size());
  os << "lambda,concurrence_ideal,concurrence_reconstructed,fidelity,residual,dof,"
        "band_min,band_q05,band_q50,band_q95,band_max,in_band";
  for (std::size_t k = 0; k < marginals; ++k) os << ",marginal_fidelity_" << k;
  os << '\n';
  for (const auto &r : rep.rows) {
    os << r.lambda << ',' << r.concurrence_ideal << ',' << r.concurrence_reconstructed
       << ',' << r.fidelity << ',' << r.residual << ',' << r.dof << ',' << r.band.min
       << ',' << r.band.quantiles[0] << ',' << r.band.quantiles[2] << ','
       << r.band.quantiles[4] << ',' << r.band.max << ',' << (r.in_band ? 1 : 0);
    for (std::size_t k = 0; k < marginals; ++k)
      os << ',' << (k < r.marginal_fidelities.size() ? r.marginal_fidelities[k] : 0.0);
    os << '\n';
  }
}

}  // namespace entdetect
