//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include "solgraph/metrics.hpp"

#include <cmath>
#include <limits>

namespace solgraph {

namespace {

void check_lengths(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) {
    throw MetricError(MetricErrorKind::kLengthMismatch,
                      "LengthMismatch: " + std::to_string(y.size()) + " vs " +
                          std::to_string(yhat.size()));
  }
  if (y.empty()) throw MetricError(MetricErrorKind::kEmpty, "Empty: no samples");
}

double squared_error(std::span<const double> y, std::span<const double> yhat) {
  double ss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - yhat[i];
    ss += d * d;
  }
  return ss;
}

}  // namespace

double rmse(std::span<const double> y, std::span<const double> yhat) {
  check_lengths(y, yhat);
  return std::sqrt(squared_error(y, yhat) / static_cast<double>(y.size()));
}

double r2(std::span<const double> y, std::span<const double> yhat) {
  check_lengths(y, yhat);
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_tot = 0.0;
  for (double v : y) ss_tot += (v - mean) * (v - mean);
  if (y.size() < 2 || ss_tot == 0.0) {
    throw MetricError(MetricErrorKind::kConstantTarget,
                      "ConstantTarget: total sum of squares is zero");
  }
  return 1.0 - squared_error(y, yhat) / ss_tot;
}

Metrics compute_metrics(std::span<const double> y, std::span<const double> yhat) {
  Metrics m;
  m.rmse = rmse(y, yhat);
  m.n = y.size();
  try {
    m.r2 = r2(y, yhat);
  } catch (const MetricError &) {
    m.r2 = std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

}  // namespace solgraph
