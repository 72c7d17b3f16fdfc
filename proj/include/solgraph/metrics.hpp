//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

namespace solgraph {

enum class MetricErrorKind { kLengthMismatch, kEmpty, kConstantTarget };

class MetricError : public std::invalid_argument {
public:
  MetricError(MetricErrorKind kind, const std::string &what)
      : std::invalid_argument(what), kind_(kind) {}
  MetricErrorKind kind() const { return kind_; }

private:
  MetricErrorKind kind_;
};

// sqrt(sum (y - yhat)^2 / n).
double rmse(std::span<const double> y, std::span<const double> yhat);

// 1 - SS_res / SS_tot. Needs n >= 2 and a non-constant y.
double r2(std::span<const double> y, std::span<const double> yhat);

struct Metrics {
  double r2 = 0.0;  // NaN when undefined (n < 2 or constant target)
  double rmse = 0.0;
  std::size_t n = 0;
};

Metrics compute_metrics(std::span<const double> y, std::span<const double> yhat);

}  // namespace solgraph
