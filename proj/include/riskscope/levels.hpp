// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstddef>
#include <vector>

namespace riskscope::dlgp {

/// Partition of the real line into left-open right-closed intervals
///   L_1 = (-inf, b_1], L_2 = (b_1, b_2], ..., L_m = (b_{m-1}, inf)
/// defined by strictly increasing boundaries b_1 < ... < b_{m-1}.
struct RobustnessLevels {
  std::vector<double> boundaries;

  std::size_t count() const { return boundaries.size() + 1; }
  void validate() const;

  /// Unique level index of rho (0-based). Throws NonFinite for NaN/inf.
  int classify(double rho) const;

  /// A representative value strictly inside level l, used when synthesizing
  /// labeled data without a real robustness value.
  double representative(int level) const;

  bool operator==(const RobustnessLevels&) const = default;
};

}  // namespace riskscope::dlgp
