#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "errors.hpp"
#include "measures.hpp"

namespace dimlab {

// Structure exponent beta(q): the unique solution of
//   sum_i p_i^q * (1/m)^beta = 1.
// All branches contract by 1/m, so the closed form is
//   beta(q) = log(sum_i p_i^q) / log m.
enum class BetaMethod { closed, bisect };

inline double beta(const IfsMeasure& mu, double q, BetaMethod method = BetaMethod::closed) {
  std::vector<double> probs;
  for (const Branch& b : mu.branches) probs.push_back(to_double(b.prob));
  auto moment = [&](double qq) {
    double s = 0;
    for (double p : probs) s += std::exp(qq * std::log(p));
    return s;
  };
  if (method == BetaMethod::closed) return std::log(moment(q)) / std::log(double(mu.base));
  // f(beta) = sum p^q r^beta - 1 decreases in beta; expand a sign-change
  // bracket then bisect.
  const double lr = std::log(1.0 / mu.base);  // negative
  auto f = [&](double be) {
    double s = 0;
    for (double p : probs) s += std::exp(q * std::log(p) + be * lr);
    return s - 1.0;
  };
  double lo = -1, hi = 1;
  while (f(lo) < 0) lo *= 2;
  while (f(hi) > 0) hi *= 2;
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    double mid = 0.5 * (lo + hi);
    if (f(mid) > 0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Singularity strength alpha(q) = -beta'(q), analytic for the closed form.
inline double alpha_of_q(const IfsMeasure& mu, double q) {
  double num = 0, den = 0;
  for (const Branch& b : mu.branches) {
    double p = to_double(b.prob);
    double w = std::exp(q * std::log(p));
    num += w * std::log(p);
    den += w;
  }
  return -num / (den * std::log(double(mu.base)));
}

struct SpectrumRow {
  double q, beta, alpha, f_alpha;
};

// Legendre transform points f(alpha(q)) = q*alpha(q) + beta(q).
inline std::vector<SpectrumRow> legendre_spectrum(const IfsMeasure& mu, double q_min, double q_max,
                                                  int steps,
                                                  BetaMethod method = BetaMethod::closed) {
  if (steps < 2 || !(q_max > q_min)) fail(Errc::domain_error, "need q_max > q_min and >= 2 steps");
  std::vector<SpectrumRow> rows;
  rows.reserve(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    double q = q_min + (q_max - q_min) * i / (steps - 1);
    SpectrumRow r;
    r.q = q;
    r.beta = beta(mu, q, method);
    if (method == BetaMethod::closed) {
      r.alpha = alpha_of_q(mu, q);
    } else {
      const double dq = 1e-5;
      r.alpha = -(beta(mu, q + dq, method) - beta(mu, q - dq, method)) / (2 * dq);
    }
    r.f_alpha = q * r.alpha + r.beta;
    rows.push_back(r);
  }
  return rows;
}

// Attainable range of local dimensions: alpha_i = log p_i / log(1/m),
// extremes over branches.
inline std::pair<double, double> dim_range(const IfsMeasure& mu) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  const double lm = std::log(1.0 / mu.base);
  for (const Branch& b : mu.branches) {
    double a = std::log(to_double(b.prob)) / lm;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  return {lo, hi};
}

// Information dimension sum_i p_i log(1/p_i) / log m; for a Bernoulli weight
// p on base 2 this is the familiar s(p) = -(p log p + (1-p) log(1-p))/log 2.
inline double entropy_dim(const IfsMeasure& mu) {
  double h = 0;
  for (const Branch& b : mu.branches) {
    double p = to_double(b.prob);
    h += -p * std::log(p);
  }
  return h / std::log(double(mu.base));
}

inline double entropy_dim_bernoulli(double p) {
  if (!(p > 0) || !(p < 1)) fail(Errc::domain_error, "weight must lie in (0,1)");
  if (p == 0.5) return 1.0;
  return -(p * std::log(p) + (1 - p) * std::log(1 - p)) / std::log(2.0);
}

}  // namespace dimlab
