#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "cascade.hpp"
#include "errors.hpp"
#include "measures.hpp"

namespace dimlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ProfileRow {
  int level = 0;
  double r = 0;
  double lower = 0, upper = 0;  // ball-mass bracket at radius r
  double d_lower = 0, d_upper = 0;
};

// Per-point dimension profile.  At level n the probe radius is
// (smear+1) * cell_width, so at least one full cell span fits inside a
// generic ball and the lower bracket stays positive on the support.
//   d_lower = log(upper mass)/log r   underestimates,
//   d_upper = log(lower mass)/log r   overestimates (+inf when lower = 0),
//   upper_dim_est = max d_upper over the last `window` levels,
//   lower_dim_est = min d_lower over the last `window` levels,
//   slope_est = least-squares slope of log(bracket midpoint) vs log r over
//     the last `slope_window` levels; constants cancel, making it the
//     preferred two-sided estimate.
struct DimProfile {
  double x = 0;
  int window = 5;
  int slope_window = 8;
  std::vector<ProfileRow> rows;
  double lower_dim_est = kNaN;
  double upper_dim_est = kNaN;
  double slope_est = kNaN;
  bool upper_unbounded = false;  // a window level had empty lower bracket
  bool all_zero = false;         // no level saw any mass near x
};

struct ProfileOpts {
  int window = 5;
  int slope_window = 8;
  double radius_mult = 0;  // 0: per-level automatic smear+1
};

namespace detail {

inline void compute_estimates(DimProfile& p) {
  const auto n = static_cast<std::int64_t>(p.rows.size());
  if (n == 0) {
    p.all_zero = true;
    return;
  }
  p.all_zero = true;
  for (const auto& row : p.rows)
    if (row.upper > 0) p.all_zero = false;
  const std::int64_t w0 = std::max<std::int64_t>(0, n - p.window);
  double lo = kInf, up = -kInf;
  p.upper_unbounded = false;
  for (std::int64_t i = w0; i < n; ++i) {
    const auto& row = p.rows[static_cast<std::size_t>(i)];
    if (row.upper > 0) lo = std::min(lo, row.d_lower);
    if (row.lower > 0)
      up = std::max(up, row.d_upper);
    else {
      up = kInf;
      p.upper_unbounded = true;
    }
  }
  p.lower_dim_est = lo;
  p.upper_dim_est = up;

  const std::int64_t s0 = std::max<std::int64_t>(0, n - p.slope_window);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::int64_t i = s0; i < n; ++i) {
    const auto& row = p.rows[static_cast<std::size_t>(i)];
    if (!(row.upper > 0)) continue;
    double X = std::log(row.r);
    double Y = std::log(0.5 * (row.lower + row.upper));
    sx += X;
    sy += Y;
    sxx += X * X;
    sxy += X * Y;
    ++m;
  }
  if (m >= 2) {
    double den = m * sxx - sx * sx;
    p.slope_est = den != 0 ? (m * sxy - sx * sy) / den : kNaN;
  } else {
    p.slope_est = kNaN;
  }
}

inline void push_row(DimProfile& p, int level, double r, double lower, double upper) {
  ProfileRow row;
  row.level = level;
  row.r = r;
  row.lower = lower;
  row.upper = upper;
  const double lr = std::log(r);
  row.d_lower = upper > 0 ? std::log(upper) / lr : kInf;
  row.d_upper = lower > 0 ? std::log(lower) / lr : kInf;
  p.rows.push_back(row);
}

}  // namespace detail

// Streaming profiler over a fixed point grid: feed one level at a time so a
// deep stack never has to be held in memory at once.
template <class T>
class GridProfiler {
 public:
  GridProfiler(std::vector<double> xs, ProfileOpts opts = {})
      : xs_(std::move(xs)), opts_(opts), profs_(xs_.size()) {
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      profs_[i].x = xs_[i];
      profs_[i].window = opts_.window;
      profs_[i].slope_window = opts_.slope_window;
    }
  }

  void add_level(const MassVector<T>& v) {
    if (!profs_.empty() && !profs_[0].rows.empty() && last_level_ >= v.level)
      fail(Errc::level_mismatch, "levels must be fed in strictly increasing order");
    last_level_ = v.level;
    const double mult = opts_.radius_mult > 0 ? opts_.radius_mult : v.smear + 1;
    const double r = mult * v.cell_width();
    const Rat rho = rat_from_double(mult);  // exact in cell units at every level
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      auto b = ball_mass_cells(v, xs_[i], rho);
      detail::push_row(profs_[i], v.level, r, to_double(b.lower), to_double(b.upper));
    }
  }

  std::vector<DimProfile> finalize() {
    for (auto& p : profs_) detail::compute_estimates(p);
    return std::move(profs_);
  }

 private:
  std::vector<double> xs_;
  ProfileOpts opts_;
  std::vector<DimProfile> profs_;
  int last_level_ = -1;
};

// Profile from an in-memory level stack (levels strictly increasing).
template <class T>
DimProfile dim_profile(const std::vector<MassVector<T>>& levels, double x,
                       ProfileOpts opts = {}) {
  if (levels.empty()) fail(Errc::domain_error, "empty level stack");
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (levels[i].base != levels[0].base) fail(Errc::base_mismatch, "mixed bases in stack");
    if (levels[i].level <= levels[i - 1].level)
      fail(Errc::level_mismatch, "levels must be strictly increasing");
  }
  {
    const auto& deep = levels.back();
    if (!deep.cyclic) {
      auto s = support_of_vector(deep);
      auto hull = s.hull();
      const double mult0 = opts.radius_mult > 0 ? opts.radius_mult : levels[0].smear + 1;
      const double r0 = mult0 * levels[0].cell_width();
      if (x < hull.lo - r0 || x > hull.hi + r0)
        fail(Errc::point_outside_hull, "x = " + std::to_string(x) + " is outside the support hull");
    }
  }
  GridProfiler<T> g({x}, opts);
  for (const auto& v : levels) g.add_level(v);
  auto out = g.finalize();
  DimProfile p = std::move(out[0]);
  if (p.all_zero) fail(Errc::all_brackets_zero, "no level saw mass near x");
  return p;
}

// ---------------------------------------------------------------------------
// Exact and bracketed dimension values

struct DimValue {
  double value = 0;
  bool exact = false;
  double lo = 0, hi = 0;
};

inline DimValue exact_dim(double v) { return DimValue{v, true, v, v}; }

inline DimValue dim_value_of(const DimProfile& p) {
  DimValue d;
  d.exact = false;
  d.lo = p.lower_dim_est;
  d.hi = p.upper_dim_est;
  d.value = std::isfinite(p.slope_est) ? p.slope_est
            : std::isfinite(d.hi)      ? 0.5 * (d.lo + d.hi)
                                       : d.lo;
  return d;
}

// Local dimension at the left endpoint of the support: the endpoint sits in
// the repeated-minimal-digit cylinder, whose level-n mass is p_min^n.  The
// minimal-digit string is unique for every valid system (digits are
// distinct), so the ambiguous-branch failure cannot arise for inputs that
// pass construction-time validation.
inline DimValue dim_at_left_endpoint(const IfsMeasure& mu) {
  const Branch& b = mu.branches.front();
  double p = to_double(b.prob);
  return exact_dim(std::log(p) / std::log(1.0 / mu.base));
}

inline DimValue dim_at_right_endpoint(const IfsMeasure& mu) {
  const Branch& b = mu.branches.back();
  double p = to_double(b.prob);
  return exact_dim(std::log(p) / std::log(1.0 / mu.base));
}

// Dimension of the product measure at a corner of the support rectangle:
// the convolution at the corresponding boundary point inherits the sum.
inline DimValue corner_dim(const DimValue& a, const DimValue& b) {
  return DimValue{a.value + b.value, a.exact && b.exact, a.lo + b.lo, a.hi + b.hi};
}

// Sandwich profile for a point with a unique source decomposition z = x0+y0:
// per-level brackets multiply, dimension estimates add.
inline DimProfile unique_pair_dim(const DimProfile& pm, const DimProfile& pn) {
  DimProfile out;
  out.x = pm.x + pn.x;
  out.window = pm.window;
  out.slope_window = pm.slope_window;
  std::size_t i = 0, j = 0;
  while (i < pm.rows.size() && j < pn.rows.size()) {
    if (pm.rows[i].level < pn.rows[j].level) {
      ++i;
      continue;
    }
    if (pn.rows[j].level < pm.rows[i].level) {
      ++j;
      continue;
    }
    const auto& a = pm.rows[i];
    const auto& b = pn.rows[j];
    detail::push_row(out, a.level, std::max(a.r, b.r), a.lower * b.lower, a.upper * b.upper);
    ++i;
    ++j;
  }
  detail::compute_estimates(out);
  // dimension estimates of a product point are the sums of the factors'
  out.lower_dim_est = pm.lower_dim_est + pn.lower_dim_est;
  out.upper_dim_est = pm.upper_dim_est + pn.upper_dim_est;
  out.slope_est = pm.slope_est + pn.slope_est;
  out.upper_unbounded = pm.upper_unbounded || pn.upper_unbounded;
  return out;
}

// Dimension at the translate of a support gap (b, c) of nu by the right edge
// of supp mu = [A, A+ell].  Only two source pairs can feed z = A+ell+b:
// (A+ell, b) and (A, c).  When c-b exceeds ell the first pair is alone
// (case 1); when c-b equals ell both contribute and the ball mass is the sum
// of the two product masses (case 2).
struct GapPointResult {
  int case_id = 0;  // 1: gap wider than supp mu; 2: exact fit
  DimProfile profile;
  double pair_sum_right = kNaN;  // slope-est sum of the (right edge, b) pair
  double pair_sum_left = kNaN;   // slope-est sum of the (left edge, c) pair
  bool equality_observed = false;
};

inline GapPointResult gap_point_dim(const DimProfile& pm_right, const DimProfile& pm_left,
                                    const DimProfile& pn_b, const DimProfile& pn_c,
                                    double gap_diam, double supp_len, double tol = 1e-9) {
  if (gap_diam < supp_len - tol)
    fail(Errc::gap_too_small, "gap diameter " + std::to_string(gap_diam) +
                                  " below support length " + std::to_string(supp_len));
  const double z1 = pm_right.x + pn_b.x;
  const double z2 = pm_left.x + pn_c.x;
  GapPointResult res;
  // edge points have empty lower brackets, so the one-sided upper estimate
  // is unbounded there; the slope estimate is the finite two-sided proxy
  res.pair_sum_right = pm_right.slope_est + pn_b.slope_est;
  res.pair_sum_left = pm_left.slope_est + pn_c.slope_est;
  if (gap_diam > supp_len + tol) {
    res.case_id = 1;
    res.profile = unique_pair_dim(pm_right, pn_b);
    return res;
  }
  if (std::abs(z1 - z2) > 1e-9 * std::max(1.0, std::abs(z1)))
    fail(Errc::decomposition_mismatch, "the two candidate pairs target different points");
  res.case_id = 2;
  DimProfile out;
  out.x = z1;
  out.window = pm_right.window;
  out.slope_window = pm_right.slope_window;
  std::size_t i = 0, j = 0, k = 0, l = 0;
  while (i < pm_right.rows.size() && j < pn_b.rows.size() && k < pm_left.rows.size() &&
         l < pn_c.rows.size()) {
    int lev = std::max(std::max(pm_right.rows[i].level, pn_b.rows[j].level),
                       std::max(pm_left.rows[k].level, pn_c.rows[l].level));
    if (pm_right.rows[i].level < lev) {
      ++i;
      continue;
    }
    if (pn_b.rows[j].level < lev) {
      ++j;
      continue;
    }
    if (pm_left.rows[k].level < lev) {
      ++k;
      continue;
    }
    if (pn_c.rows[l].level < lev) {
      ++l;
      continue;
    }
    const auto& r1 = pm_right.rows[i];
    const auto& r2 = pn_b.rows[j];
    const auto& r3 = pm_left.rows[k];
    const auto& r4 = pn_c.rows[l];
    detail::push_row(out, lev, std::max(r1.r, r2.r), r1.lower * r2.lower + r3.lower * r4.lower,
                     r1.upper * r2.upper + r3.upper * r4.upper);
    ++i;
    ++j;
    ++k;
    ++l;
  }
  detail::compute_estimates(out);
  res.profile = std::move(out);
  const double pair_min = std::min(res.pair_sum_right, res.pair_sum_left);
  if (std::isfinite(pair_min) && std::isfinite(res.profile.slope_est))
    res.equality_observed = std::abs(res.profile.slope_est - pair_min) <= 5e-2;
  return res;
}

// Upper bound from writing z as a sum: dimension is at most the sum of the
// parts, minimized over the offered decompositions.
inline DimValue decomposition_bound(double z,
                                    const std::vector<std::vector<std::pair<double, DimValue>>>&
                                        candidates,
                                    double tol = 1e-9) {
  if (candidates.empty()) fail(Errc::degenerate_weights, "no candidate decompositions");
  DimValue best;
  best.value = kInf;
  best.hi = kInf;
  best.lo = 0;
  best.exact = false;
  for (const auto& cand : candidates) {
    double sum_x = 0, sum_v = 0, sum_hi = 0;
    for (const auto& [xi, di] : cand) {
      sum_x += xi;
      sum_v += di.value;
      sum_hi += di.hi;
    }
    if (std::abs(sum_x - z) > tol * std::max(1.0, std::abs(z)))
      fail(Errc::decomposition_mismatch,
           "decomposition sums to " + std::to_string(sum_x) + ", not " + std::to_string(z));
    if (sum_hi < best.hi) {
      best.hi = sum_hi;
      best.value = sum_v;
    }
  }
  return best;
}

}  // namespace dimlab
