#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

namespace svv {

// European claim on the terminal price, carried as F = F1 + F2 with F1
// Lipschitz (declared constant) and F2 of bounded variation.  The split is
// what the hedge-error rate statements are written against; evaluation only
// ever uses the sum.  `name` is what manifests and CSV headers report.
struct Payoff {
  std::string name;
  std::function<double(double)> lipschitz_part;  // F1; may be null (== 0)
  double lipschitz_constant = 0.0;
  std::function<double(double)> bv_part;  // F2; may be null (== 0)

  double eval(double x) const {
    if (!(x > 0.0)) throw std::invalid_argument("Payoff: price must be positive");
    double v = 0.0;
    if (lipschitz_part) v += lipschitz_part(x);
    if (bv_part) v += bv_part(x);
    return v;
  }
};

inline Payoff call_payoff(double strike) {
  if (!(strike > 0.0)) throw std::invalid_argument("call_payoff: strike must be positive");
  return {"call(" + std::to_string(strike) + ")",
          [strike](double x) { return x > strike ? x - strike : 0.0; }, 1.0, nullptr};
}

inline Payoff put_payoff(double strike) {
  if (!(strike > 0.0)) throw std::invalid_argument("put_payoff: strike must be positive");
  return {"put(" + std::to_string(strike) + ")",
          [strike](double x) { return x < strike ? strike - x : 0.0; }, 1.0, nullptr};
}

// Bounded-variation exemplar: amount * 1{x >= level}.
inline Payoff digital_payoff(double level, double amount = 1.0) {
  return {"digital(" + std::to_string(level) + "," + std::to_string(amount) + ")", nullptr, 0.0,
          [level, amount](double x) { return x >= level ? amount : 0.0; }};
}

// F = X(T): its perfect hedge holds one unit throughout.
inline Payoff identity_payoff() {
  return {"identity", [](double x) { return x; }, 1.0, nullptr};
}

// F independent of the path: its optimal hedge is zero.
inline Payoff constant_payoff(double value) {
  return {"constant(" + std::to_string(value) + ")", [value](double) { return value; }, 0.0,
          nullptr};
}

}  // namespace svv
