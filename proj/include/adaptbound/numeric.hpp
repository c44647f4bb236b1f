#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace adaptbound {

// Neumaier-compensated accumulator. The result depends only on the order of
// add() calls, which callers fix (e.g. by run index).
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  [[nodiscard]] double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

// 12 significant digits, the serialization precision of every CSV/JSON number.
inline std::string format_sig12(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline double round_sig12(double x) {
  if (!std::isfinite(x)) return x;
  return std::stod(format_sig12(x));
}

}  // namespace adaptbound
