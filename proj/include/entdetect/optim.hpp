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

// Small local optimizers: a Nelder-Mead simplex for low-dimensional
// smooth searches and a least-squares wrapper around Eigen's
// Levenberg-Marquardt.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <numeric>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>
#include <vector>

namespace entdetect::optim {

struct SimplexResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
};

/// Minimizes f starting from x0 with initial simplex edge `step`.
inline SimplexResult nelder_mead(
    const std::function<double(const Eigen::VectorXd &)> &f,
    const Eigen::VectorXd &x0, double step, double ftol = 1e-14,
    int max_evaluations = 4000) {
  const Eigen::Index n = x0.size();
  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> vals(pts.size());
  for (Eigen::Index i = 0; i < n; ++i) pts[static_cast<std::size_t>(i + 1)](i) += step;
  int evals = 0;
  for (std::size_t i = 0; i < pts.size(); ++i, ++evals) vals[i] = f(pts[i]);

  std::vector<std::size_t> order(pts.size());
  while (evals < max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];
    if (std::abs(vals[worst] - vals[best]) <=
        ftol * (std::abs(vals[best]) + ftol))
      break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (i != worst) centroid += pts[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + (centroid - pts[worst]);
    const double fr = f(reflected);
    ++evals;
    if (fr < vals[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = f(expanded);
      ++evals;
      if (fe < fr) {
        pts[worst] = expanded;
        vals[worst] = fe;
      } else {
        pts[worst] = reflected;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = reflected;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Eigen::VectorXd contracted =
        outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = f(contracted);
    ++evals;
    if (fc < std::min(fr, vals[worst])) {
      pts[worst] = contracted;
      vals[worst] = fc;
      continue;
    }
    // shrink towards the best vertex
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      vals[i] = f(pts[i]);
      ++evals;
    }
  }
  const auto best = static_cast<std::size_t>(
      std::min_element(vals.begin(), vals.end()) - vals.begin());
  return {pts[best], vals[best], evals};
}

using ResidualFn =
    std::function<void(const Eigen::VectorXd &x, Eigen::VectorXd &residual)>;

struct LeastSquaresResult {
  Eigen::VectorXd x;
  /// Sum of squared residuals at x.
  double cost = 0.0;
  int evaluations = 0;
};

namespace detail {

struct ResidualFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  const ResidualFn *fn = nullptr;
  int n_inputs = 0;
  int n_residuals = 0;  // actual residual count
  int n_values = 0;     // padded to >= n_inputs for MINPACK

  int inputs() const { return n_inputs; }
  int values() const { return n_values; }

  int operator()(const Eigen::VectorXd &x, Eigen::VectorXd &fvec) const {
    Eigen::VectorXd r(n_residuals);
    (*fn)(x, r);
    fvec.setZero(n_values);
    fvec.head(n_residuals) = r;
    return 0;
  }
};

}  // namespace detail

/// Levenberg-Marquardt with central-difference Jacobians.
inline LeastSquaresResult least_squares(const ResidualFn &fn,
                                        int residual_count,
                                        const Eigen::VectorXd &x0,
                                        int max_evaluations = 4000,
                                        double tolerance = 1e-15) {
  detail::ResidualFunctor functor;
  functor.fn = &fn;
  functor.n_inputs = static_cast<int>(x0.size());
  functor.n_residuals = residual_count;
  functor.n_values = std::max(residual_count, functor.n_inputs);

  Eigen::NumericalDiff<detail::ResidualFunctor, Eigen::Central> numdiff(functor);
  Eigen::LevenbergMarquardt<decltype(numdiff)> lm(numdiff);
  lm.parameters.maxfev = max_evaluations;
  lm.parameters.xtol = tolerance;
  lm.parameters.ftol = tolerance;
  lm.parameters.gtol = 0.0;

  Eigen::VectorXd x = x0;
  lm.minimize(x);

  Eigen::VectorXd r(residual_count);
  fn(x, r);
  return {x, r.squaredNorm(), static_cast<int>(lm.nfev)};
}

}  // namespace entdetect::optim
