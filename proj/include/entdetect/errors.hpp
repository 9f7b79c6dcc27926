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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace entdetect {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  DimensionError(std::size_t expected, std::size_t actual,
                 const std::string &what)
      : Error(what + ": expected dimension " + std::to_string(expected) +
              ", got " + std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

/// A matrix failed one of the density-matrix invariants.
class InvalidState : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// A marginal is too close to singular for 1/sqrt(2 rho) to exist.
class SingularReducedState : public Error {
 public:
  SingularReducedState(double min_eigenvalue, double floor, int step = -1)
      : Error(message(min_eigenvalue, floor, step)),
        min_eigenvalue_(min_eigenvalue),
        step_(step) {}

  double min_eigenvalue() const noexcept { return min_eigenvalue_; }
  /// Protocol step at which the singular marginal appeared, -1 if unknown.
  int step() const noexcept { return step_; }

 private:
  static std::string message(double ev, double floor, int step) {
    std::string s = "singular reduced state: eigenvalue " +
                    std::to_string(ev) + " <= floor " + std::to_string(floor);
    if (step >= 0) s += " at protocol step " + std::to_string(step);
    return s;
  }
  double min_eigenvalue_;
  int step_;
};

class PostSelectionImpossible : public Error {
 public:
  explicit PostSelectionImpossible(double probability)
      : Error("post-selection probability " + std::to_string(probability) +
              " is too small"),
        probability_(probability) {}
  double probability() const noexcept { return probability_; }

 private:
  double probability_;
};

/// Observables do not span the subspace the operation needs.
class RankError : public Error {
 public:
  RankError(int rank, int required)
      : Error("observable set has rank " + std::to_string(rank) +
              ", need exactly " + std::to_string(required)),
        rank_(rank) {}
  int rank() const noexcept { return rank_; }

 private:
  int rank_;
};

/// A constructive search or certificate failed; the message carries
/// diagnostics.
class CertificateFailure : public Error {
 public:
  using Error::Error;
};

class ReconstructionError : public Error {
 public:
  ReconstructionError(const std::string &what, double best_residual)
      : Error(what + " (best residual " + std::to_string(best_residual) + ")"),
        best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

}  // namespace entdetect
