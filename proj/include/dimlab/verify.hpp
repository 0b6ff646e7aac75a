#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cascade.hpp"
#include "config.hpp"
#include "convolve.hpp"
#include "errors.hpp"
#include "locdim.hpp"
#include "measures.hpp"
#include "parallel.hpp"

namespace dimlab {

// A configured desk-scale check: which claim to test, over which measures,
// at which resolution, against which bound.
struct Scenario {
  std::string name;
  std::string check;  // interior-bound | unique-pair | gap-point |
                      // isolated-point | lower-bound | torus-power | profile
  MeasureSpec mu;
  std::optional<MeasureSpec> nu;
  int level = 14;
  int grid = 64;               // interior grid size when no explicit points
  std::vector<double> points;  // optional explicit grid
  double tol = 0.05;
  double lambda = kNaN;  // upper bound for interior-bound / torus-power
  double alpha = kNaN;   // lower bound for lower-bound
  double z = kNaN;       // target point for unique-pair
  double gap_lo = kNaN, gap_hi = kNaN;  // requested gap for gap-point
  int k_max = 4;                        // isolated-point / torus-power scan depth
  int cap = 8;                          // torus-power cap on N
  std::string expect = "pass";          // pass | hypothesis-not-met | informational
  std::string mode = "double";          // double | rational
  std::string hypothesis;               // caller-certified hypothesis text
};

struct PointRecord {
  int group = 0;  // scan index (power k) for multi-stage checks, else 0
  double z = 0;
  double estimate = 0;
  double bound = 0;
  double margin = 0;  // signed so that pass means margin >= -tol
};

struct CheckReport {
  std::string name;
  std::string check;
  std::string audit;  // hypothesis audit trail
  std::vector<PointRecord> points;
  std::string verdict;  // pass | fail | hypothesis-not-met
  double min_margin = kNaN;
  double runtime_s = 0;
  std::string expect = "pass";
  bool ok = false;  // verdict matches expectation
};

namespace detail {

inline CheckReport report_for(const Scenario& sc) {
  CheckReport rep;
  rep.name = sc.name;
  rep.check = sc.check;
  rep.expect = sc.expect;
  return rep;
}

// Verdict from the margin convention: pass iff every margin >= -tol.
inline void close_bounds(CheckReport& rep, double tol) {
  double mn = kInf;
  for (const auto& p : rep.points) mn = std::min(mn, p.margin);
  rep.min_margin = rep.points.empty() ? kNaN : mn;
  rep.verdict = rep.points.empty() || mn >= -tol ? "pass" : "fail";
}

// Common base of a two-measure scenario; atomic-only trees take base 3.
inline int pair_base(const Scenario& sc) {
  int b = spec_base(sc.mu);
  if (sc.nu) {
    int bn = spec_base(*sc.nu);
    if (b != 0 && bn != 0 && b != bn)
      fail(Errc::base_mismatch, "mu and nu use different bases");
    if (b == 0) b = bn;
  }
  return b == 0 ? 3 : b;
}

// Exact convex hull of the expression's support, from the fixed points of the
// extreme branches; no lattice or smear widening.
inline Interval spec_hull(const MeasureSpec& s) {
  switch (s.kind) {
    case MeasureSpec::Kind::ifs: {
      const IfsMeasure& mu = s.ifs;
      Rat lo = mu.shift + mu.scale * Rat(mu.branches.front().digit) / (mu.base - 1);
      Rat hi = mu.shift + mu.scale * Rat(mu.branches.back().digit) / (mu.base - 1);
      return {to_double(lo), to_double(hi)};
    }
    case MeasureSpec::Kind::atomic:
      return {to_double(s.atoms.atoms.front().pos), to_double(s.atoms.atoms.back().pos)};
    case MeasureSpec::Kind::convolve: {
      Interval acc{0, 0};
      for (const auto& c : s.children) {
        Interval h = spec_hull(c);
        acc.lo += h.lo;
        acc.hi += h.hi;
      }
      return acc;
    }
    case MeasureSpec::Kind::power: {
      Interval h = spec_hull(s.children[0]);
      return {s.k * h.lo, s.k * h.hi};
    }
  }
  fail(Errc::config_error, "unreachable measure kind");
}

inline int audit_level(const Scenario& sc) { return std::min(sc.level, 10); }

inline double lattice_tol(int base, int level) {
  return 4.0 * std::pow(static_cast<double>(base), -level);
}

inline std::vector<double> interior_grid(double lo, double hi, int count) {
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(count));
  for (int j = 1; j <= count; ++j) xs.push_back(lo + (hi - lo) * j / (count + 1));
  return xs;
}

// Grid for a check over the convolution's support: explicit points must lie
// in the predicted hull; otherwise an interior mesh is generated.
inline std::vector<double> scenario_grid(const Scenario& sc, const Interval& hull) {
  if (!sc.points.empty()) {
    for (double x : sc.points)
      if (x < hull.lo - 1e-9 || x > hull.hi + 1e-9)
        fail(Errc::config_error,
             "grid point " + std::to_string(x) + " lies outside the support hull");
    return sc.points;
  }
  return interior_grid(hull.lo, hull.hi, sc.grid);
}

// Streamed profiles of mu (optionally convolved with nu) over fixed points.
template <class T>
std::vector<DimProfile> conv_profiles(const MeasureSpec& mu, const MeasureSpec* nu, int base,
                                      int level, const std::vector<double>& xs,
                                      ProfileOpts opts = {}) {
  GridProfiler<T> g(xs, opts);
  for (int l = 1; l <= level; ++l) {
    auto vm = build_level<T>(mu, base, l);
    if (!nu) {
      g.add_level(vm);
    } else if (nu->kind == MeasureSpec::Kind::atomic) {
      g.add_level(convolve_atomic(vm, nu->atoms));
    } else {
      auto vn = build_level<T>(*nu, base, l);
      g.add_level(convolve(vm, vn));
    }
  }
  return g.finalize();
}

inline std::vector<DimProfile> conv_profiles_mode(const Scenario& sc, const MeasureSpec& mu,
                                                  const MeasureSpec* nu, int base,
                                                  const std::vector<double>& xs,
                                                  ProfileOpts opts = {}) {
  if (sc.mode == "rational") return conv_profiles<Rat>(mu, nu, base, sc.level, xs, opts);
  return conv_profiles<double>(mu, nu, base, sc.level, xs, opts);
}

inline std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace detail

// Upper bound over the interior: supp mu must be the full unit interval and
// every gap of nu must have diameter below one; then every interior grid
// point's upper estimate stays below lambda + tol.
inline CheckReport check_interior_bound(const Scenario& sc) {
  auto rep = detail::report_for(sc);
  if (!sc.nu) fail(Errc::config_error, "interior-bound needs nu");
  if (!std::isfinite(sc.lambda)) fail(Errc::config_error, "interior-bound needs lambda");
  const int base = detail::pair_base(sc);
  const int alevel = detail::audit_level(sc);
  const double lat = detail::lattice_tol(base, alevel);

  // gap audit of nu runs first
  auto sn = audit_support(*sc.nu, base, alevel);
  double max_gap = 0;
  for (const auto& g : gaps(sn)) max_gap = std::max(max_gap, g.diam());
  auto sm = audit_support(sc.mu, base, alevel);
  Interval hm = detail::spec_hull(sc.mu);
  bool mu_full = sm.intervals.size() == 1 && std::abs(hm.lo) < 1e-12 &&
                 std::abs(hm.hi - 1.0) < 1e-12;
  rep.audit = "max gap of nu = " + detail::fmt_g(max_gap) + " (needs < 1); supp mu = [" +
              detail::fmt_g(hm.lo) + ", " + detail::fmt_g(hm.hi) + "] in " +
              std::to_string(sm.intervals.size()) + " piece(s) (needs [0,1] in one)";
  if (max_gap >= 1.0 - lat || !mu_full) {
    rep.verdict = "hypothesis-not-met";
    return rep;
  }

  Interval hn = detail::spec_hull(*sc.nu);
  Interval hull{hm.lo + hn.lo, hm.hi + hn.hi};
  auto xs = detail::scenario_grid(sc, hull);
  auto profs = detail::conv_profiles_mode(sc, sc.mu, &*sc.nu, base, xs);
  for (const auto& p : profs)
    rep.points.push_back({0, p.x, p.upper_dim_est, sc.lambda, sc.lambda - p.upper_dim_est});
  detail::close_bounds(rep, sc.tol);
  return rep;
}

// Lower bound over the interior; the uniform-lower-dimension hypothesis on mu
// is the caller's certificate and is recorded, not re-derived.
inline CheckReport check_lower_bound(const Scenario& sc) {
  auto rep = detail::report_for(sc);
  if (!sc.nu) fail(Errc::config_error, "lower-bound needs nu");
  if (!std::isfinite(sc.alpha)) fail(Errc::config_error, "lower-bound needs alpha");
  const int base = detail::pair_base(sc);
  Interval hm = detail::spec_hull(sc.mu);
  Interval hn = detail::spec_hull(*sc.nu);
  rep.audit = sc.hypothesis.empty()
                  ? "uniform lower dimension >= " + detail::fmt_g(sc.alpha) +
                        " certified by the scenario author"
                  : sc.hypothesis;
  Interval hull{hm.lo + hn.lo, hm.hi + hn.hi};
  auto xs = detail::scenario_grid(sc, hull);
  auto profs = detail::conv_profiles_mode(sc, sc.mu, &*sc.nu, base, xs);
  for (const auto& p : profs)
    rep.points.push_back({0, p.x, p.lower_dim_est, sc.alpha, p.lower_dim_est - sc.alpha});
  detail::close_bounds(rep, sc.tol);
  return rep;
}

// Profile-only scenario: estimates are recorded with no asserted bound.
inline CheckReport check_profile(const Scenario& sc) {
  auto rep = detail::report_for(sc);
  const int base = detail::pair_base(sc);
  Interval hull = detail::spec_hull(sc.mu);
  if (sc.nu) {
    Interval hn = detail::spec_hull(*sc.nu);
    hull = {hull.lo + hn.lo, hull.hi + hn.hi};
  }
  auto xs = detail::scenario_grid(sc, hull);
  auto profs = detail::conv_profiles_mode(sc, sc.mu, sc.nu ? &*sc.nu : nullptr, base, xs);
  for (const auto& p : profs) rep.points.push_back({0, p.x, p.slope_est, kNaN, 0});
  rep.audit = "profile only, no bound asserted";
  rep.verdict = "pass";
  rep.min_margin = kNaN;
  return rep;
}

// Compares the convolved profile at z against the product of the factor
// profiles at the unique source pair.  The pair is derived from support
// geometry: both left edges, both right edges, or a gap wider than supp mu.
inline CheckReport check_unique_pair(const Scenario& sc) {
  auto rep = detail::report_for(sc);
  if (!sc.nu) fail(Errc::config_error, "unique-pair needs nu");
  if (!std::isfinite(sc.z)) fail(Errc::config_error, "unique-pair needs z");
  const int base = detail::pair_base(sc);
  const int alevel = detail::audit_level(sc);
  const double lat = detail::lattice_tol(base, alevel);
  Interval hm = detail::spec_hull(sc.mu);
  Interval hn = detail::spec_hull(*sc.nu);
  double x0 = kNaN, y0 = kNaN;
  std::string how;
  if (std::abs(sc.z - (hm.lo + hn.lo)) <= lat) {
    x0 = hm.lo;
    y0 = hn.lo;
    how = "both left edges";
  } else if (std::abs(sc.z - (hm.hi + hn.hi)) <= lat) {
    x0 = hm.hi;
    y0 = hn.hi;
    how = "both right edges";
  } else {
    auto sn = audit_support(*sc.nu, base, alevel);
    for (const auto& g : gaps(sn)) {
      if (g.diam() > hm.len() + lat && std::abs(sc.z - (hm.hi + g.lo)) <= lat) {
        x0 = hm.hi;
        y0 = g.lo;
        how = "gap of nu wider than supp mu";
        break;
      }
    }
    if (!std::isfinite(x0))
      fail(Errc::decomposition_not_unique,
           "no support geometry pins a unique source pair for z = " + std::to_string(sc.z));
  }
  rep.audit = "unique pair (" + detail::fmt_g(x0) + ", " + detail::fmt_g(y0) + "): " + how;

  ProfileOpts opts;
  auto run = [&](auto tag) {
    using T = decltype(tag);
    GridProfiler<T> gm({x0}, opts), gn({y0}, opts), gc({sc.z}, opts);
    for (int l = 1; l <= sc.level; ++l) {
      auto vm = build_level<T>(sc.mu, base, l);
      auto vn = build_level<T>(*sc.nu, base, l);
      gm.add_level(vm);
      gn.add_level(vn);
      if (sc.nu->kind == MeasureSpec::Kind::atomic)
        gc.add_level(convolve_atomic(vm, sc.nu->atoms));
      else
        gc.add_level(convolve(vm, vn));
    }
    auto pm = gm.finalize()[0];
    auto pn = gn.finalize()[0];
    auto pc = gc.finalize()[0];
    auto pair = unique_pair_dim(pm, pn);
    // slope agreement plus bracket overlap, both within tol
    rep.points.push_back({0, sc.z, pc.slope_est, pair.slope_est,
                          -std::abs(pc.slope_est - pair.slope_est)});
    auto capped = [](double v) { return std::isfinite(v) ? v : 1e9; };
    double overlap = std::min(capped(pc.upper_dim_est), capped(pair.upper_dim_est)) -
                     std::max(pc.lower_dim_est, pair.lower_dim_est);
    rep.points.push_back({1, sc.z, pc.slope_est, pair.slope_est, overlap});
  };
  if (sc.mode == "rational")
    run(Rat());
  else
    run(double());
  detail::close_bounds(rep, sc.tol);
  return rep;
}

// Gap-point dispatch: locate the gap of nu, classify it against the length
// of supp mu, and compare the convolved profile at the translated gap edge
// against the one- or two-pair engine result.
inline CheckReport check_gap_point(const Scenario& sc) {
  auto rep = detail::report_for(sc);
  if (!sc.nu) fail(Errc::config_error, "gap-point needs nu");
  const int base = detail::pair_base(sc);
  const int alevel = detail::audit_level(sc);
  const double lat = detail::lattice_tol(base, alevel);
  Interval hm = detail::spec_hull(sc.mu);
  const double ell = hm.len();
  auto sn = audit_support(*sc.nu, base, alevel);
  double b = kNaN, c = kNaN;
  for (const auto& g : gaps(sn)) {
    bool wanted = std::isfinite(sc.gap_lo)
                      ? std::abs(g.lo - sc.gap_lo) <= lat && std::abs(g.hi - sc.gap_hi) <= lat
                      : g.diam() >= ell - lat && (!std::isfinite(c) || g.diam() > c - b);
    if (wanted) {
      b = g.lo;
      c = g.hi;
    }
  }
  if (!std::isfinite(b) || c - b < ell - lat)
    fail(Errc::gap_not_found, "no gap of nu with diameter >= supp-mu length " +
                                  detail::fmt_g(ell) + " at level " + std::to_string(alevel));
  const double z = hm.hi + b;

  ProfileOpts opts;
  GapPointResult res;
  double conv_slope = kNaN;
  auto run = [&](auto tag) {
    using T = decltype(tag);
    GridProfiler<T> gr({hm.hi}, opts), gl({hm.lo}, opts), gb({b}, opts), gc({c}, opts),
        gz({z}, opts);
    for (int l = 1; l <= sc.level; ++l) {
      auto vm = build_level<T>(sc.mu, base, l);
      auto vn = build_level<T>(*sc.nu, base, l);
      gr.add_level(vm);
      gl.add_level(vm);
      gb.add_level(vn);
      gc.add_level(vn);
      if (sc.nu->kind == MeasureSpec::Kind::atomic)
        gz.add_level(convolve_atomic(vm, sc.nu->atoms));
      else
        gz.add_level(convolve(vm, vn));
    }
    res = gap_point_dim(gr.finalize()[0], gl.finalize()[0], gb.finalize()[0], gc.finalize()[0],
                        c - b, ell, lat);
    conv_slope = gz.finalize()[0].slope_est;
  };
  if (sc.mode == "rational")
    run(Rat());
  else
    run(double());

  rep.audit = "gap (" + detail::fmt_g(b) + ", " + detail::fmt_g(c) + ") vs supp length " +
              detail::fmt_g(ell) + "; case " + std::to_string(res.case_id) + "; pair sums " +
              detail::fmt_g(res.pair_sum_right) + " / " + detail::fmt_g(res.pair_sum_left);
  if (res.case_id == 2)
    rep.audit += res.equality_observed ? "; equality observed" : "; equality not observed";
  rep.points.push_back({res.case_id, z, conv_slope, res.profile.slope_est,
                        -std::abs(conv_slope - res.profile.slope_est)});
  if (res.case_id == 2) {
    // combined two-pair bracket must land on the smaller of the pair sums
    double pair_min = std::min(res.pair_sum_right, res.pair_sum_left);
    rep.points.push_back({3, z, res.profile.slope_est, pair_min,
                          -std::abs(res.profile.slope_est - pair_min)});
  }
  detail::close_bounds(rep, sc.tol);
  return rep;
}

// Evidence scan for an isolated boundary dimension: the boundary value of
// the k-th power is k times the endpoint dimension (exact); the interior
// ceiling is measured on a grid.  Evidence at k means the boundary value
// exceeds the ceiling by more than tol.
inline CheckReport check_isolated_point(const Scenario& sc) {
  auto rep = detail::report_for(sc);
  if (sc.mu.kind != MeasureSpec::Kind::ifs)
    fail(Errc::config_error, "isolated-point needs a plain ifs measure");
  const IfsMeasure& mu = sc.mu.ifs;
  if (mu.branches.front().digit != 0)
    fail(Errc::ambiguous_endpoint_branch, "no branch fixes the left endpoint digit 0");
  const int base = mu.base;
  const int alevel = detail::audit_level(sc);
  const double d_end = dim_at_left_endpoint(mu).value;
  Interval hm = detail::spec_hull(sc.mu);

  struct Stage {
    bool full = false;
    double s_k = -kInf;
    bool unbounded = false;
  };
  std::vector<Stage> stages(static_cast<std::size_t>(sc.k_max) + 1);

  auto run = [&](auto tag) {
    using T = decltype(tag);
    std::vector<GridProfiler<T>> profs;
    profs.reserve(static_cast<std::size_t>(sc.k_max));
    for (int k = 1; k <= sc.k_max; ++k)
      profs.emplace_back(detail::interior_grid(k * hm.lo, k * hm.hi, sc.grid), ProfileOpts{});
    for (int l = 1; l <= sc.level; ++l) {
      auto v = build_level<T>(sc.mu, base, l);
      MassVector<T> p = v;
      profs[0].add_level(p);
      for (int k = 2; k <= sc.k_max; ++k) {
        p = convolve(p, v);
        profs[static_cast<std::size_t>(k - 1)].add_level(p);
      }
      if (l == alevel) {
        MassVector<T> q = v;
        stages[1].full = support_of_vector(q).intervals.size() == 1;
        for (int k = 2; k <= sc.k_max; ++k) {
          q = convolve(q, v);
          stages[static_cast<std::size_t>(k)].full =
              support_of_vector(q).intervals.size() == 1;
        }
      }
    }
    for (int k = 1; k <= sc.k_max; ++k) {
      auto ps = profs[static_cast<std::size_t>(k - 1)].finalize();
      auto& st = stages[static_cast<std::size_t>(k)];
      for (const auto& p : ps) {
        if (!std::isfinite(p.upper_dim_est)) st.unbounded = true;
        st.s_k = std::max(st.s_k, p.upper_dim_est);
      }
    }
  };
  if (sc.mode == "rational")
    run(Rat());
  else
    run(double());

  int evidence_k = 0;
  for (int k = 1; k <= sc.k_max; ++k) {
    const auto& st = stages[static_cast<std::size_t>(k)];
    double b_k = k * d_end;
    rep.points.push_back({k, static_cast<double>(k), st.s_k, b_k, b_k - st.s_k});
    if (st.full && !st.unbounded && b_k > st.s_k + sc.tol && evidence_k == 0) evidence_k = k;
  }
  double best = -kInf;
  for (const auto& p : rep.points) best = std::max(best, p.margin);
  rep.min_margin = best;  // the flag metric: best boundary-over-ceiling margin
  rep.audit = "endpoint dim " + detail::fmt_g(d_end) + "; full-support audits at level " +
              std::to_string(alevel);
  if (evidence_k > 0) {
    rep.audit += "; isolated-point evidence at k = " + std::to_string(evidence_k);
    rep.verdict = "pass";
  } else {
    rep.audit += "; no k in 1.." + std::to_string(sc.k_max) + " showed evidence";
    rep.verdict = "fail";
  }
  return rep;
}

// Torus power scan: find the smallest N whose cyclic power covers the whole
// circle at lattice resolution, then bound the upper estimates of the next
// k_max powers by lambda * N.
inline CheckReport check_torus_power(const Scenario& sc) {
  auto rep = detail::report_for(sc);
  if (!std::isfinite(sc.lambda)) fail(Errc::config_error, "torus-power needs lambda");
  const int base = detail::pair_base(sc);

  int found_n = 0;
  auto scan = [&](auto tag) {
    using T = decltype(tag);
    auto u = build_cyclic<T>(sc.mu, base, sc.level);
    MassVector<T> acc = u;
    for (int n = 1; n <= sc.cap; ++n) {
      if (covers_circle(acc)) {
        found_n = n;
        return;
      }
      if (n < sc.cap) acc = convolve_cyclic(acc, u);
    }
  };
  auto bound = [&](auto tag) {
    using T = decltype(tag);
    std::vector<GridProfiler<T>> profs;
    std::vector<double> xs;
    for (int j = 0; j < sc.grid; ++j) xs.push_back(j / static_cast<double>(sc.grid));
    for (int k = 1; k <= sc.k_max; ++k) profs.emplace_back(xs, ProfileOpts{});
    for (int l = 1; l <= sc.level; ++l) {
      auto u = build_cyclic<T>(sc.mu, base, l);
      MassVector<T> p = u;
      for (int j = 2; j <= found_n; ++j) p = convolve_cyclic(p, u);
      for (int k = 1; k <= sc.k_max; ++k) {
        p = convolve_cyclic(p, u);
        profs[static_cast<std::size_t>(k - 1)].add_level(p);
      }
    }
    const double cap_val = sc.lambda * found_n;
    for (int k = 1; k <= sc.k_max; ++k) {
      auto ps = profs[static_cast<std::size_t>(k - 1)].finalize();
      for (const auto& p : ps)
        rep.points.push_back({k, p.x, p.upper_dim_est, cap_val, cap_val - p.upper_dim_est});
    }
  };
  if (sc.mode == "rational") {
    scan(Rat());
    if (found_n == 0)
      fail(Errc::no_interior_found, "no power up to " + std::to_string(sc.cap) +
                                        " covers the circle at level " +
                                        std::to_string(sc.level));
    bound(Rat());
  } else {
    scan(double());
    if (found_n == 0)
      fail(Errc::no_interior_found, "no power up to " + std::to_string(sc.cap) +
                                        " covers the circle at level " +
                                        std::to_string(sc.level));
    bound(double());
  }
  rep.audit = "full circle cover first at N = " + std::to_string(found_n) + "; bound " +
              detail::fmt_g(sc.lambda) + " * N = " + detail::fmt_g(sc.lambda * found_n) +
              " checked for k = 1.." + std::to_string(sc.k_max);
  detail::close_bounds(rep, sc.tol);
  return rep;
}

// ---------------------------------------------------------------------------
// Suite driver

inline CheckReport run_scenario(const Scenario& sc) {
  if (!(sc.tol > 0)) fail(Errc::config_error, "scenario tol must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  CheckReport rep;
  try {
    if (sc.check == "interior-bound")
      rep = check_interior_bound(sc);
    else if (sc.check == "lower-bound")
      rep = check_lower_bound(sc);
    else if (sc.check == "unique-pair")
      rep = check_unique_pair(sc);
    else if (sc.check == "gap-point")
      rep = check_gap_point(sc);
    else if (sc.check == "isolated-point")
      rep = check_isolated_point(sc);
    else if (sc.check == "torus-power")
      rep = check_torus_power(sc);
    else if (sc.check == "profile")
      rep = check_profile(sc);
    else
      fail(Errc::config_error, "unknown check kind '" + sc.check + "'");
  } catch (const Error& e) {
    rep = detail::report_for(sc);
    rep.verdict = "fail";
    rep.audit = std::string(errc_name(e.code())) + ": " + e.what();
  }
  rep.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.ok = sc.expect == "informational" || rep.verdict == sc.expect;
  return rep;
}

namespace detail {

inline std::string csv_text(std::string s) {
  for (char& ch : s)
    if (ch == ',' || ch == '"' || ch == '\n') ch = ';';
  return s;
}

}  // namespace detail

// Runs every scenario, writes reports/<name>.csv per scenario plus a summary
// CSV, prints a human table, and returns the reports in input order.
inline std::vector<CheckReport> run_suite(const std::vector<Scenario>& scenarios,
                                          const std::string& out_dir, std::ostream& log) {
  for (const auto& sc : scenarios) {
    if (sc.name.empty() || sc.check.empty())
      fail(Errc::config_error, "every scenario needs a name and a check kind");
    if (!(sc.tol > 0)) fail(Errc::config_error, "scenario '" + sc.name + "': tol must be > 0");
  }
  std::vector<CheckReport> reports(scenarios.size());
  parallel_for(static_cast<std::int64_t>(scenarios.size()), [&](std::int64_t i) {
    reports[static_cast<std::size_t>(i)] = run_scenario(scenarios[static_cast<std::size_t>(i)]);
  });

  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) fail(Errc::io_error, "cannot create " + out_dir + ": " + ec.message());
    std::ofstream sum(out_dir + "/summary.csv");
    if (!sum) fail(Errc::io_error, "cannot write " + out_dir + "/summary.csv");
    sum << "name,check,verdict,expect,ok,runtime_s,points,min_margin,audit\n";
    for (const auto& r : reports) {
      sum << r.name << ',' << r.check << ',' << r.verdict << ',' << r.expect << ','
          << (r.ok ? 1 : 0) << ',' << detail::fmt_g(r.runtime_s) << ',' << r.points.size()
          << ',' << detail::fmt_g(r.min_margin) << ',' << detail::csv_text(r.audit) << '\n';
      std::ofstream per(out_dir + "/" + r.name + ".csv");
      if (!per) fail(Errc::io_error, "cannot write " + out_dir + "/" + r.name + ".csv");
      per << "group,z,estimate,bound,margin\n";
      for (const auto& p : r.points)
        per << p.group << ',' << detail::fmt_double(p.z) << ',' << detail::fmt_double(p.estimate)
            << ',' << detail::fmt_double(p.bound) << ',' << detail::fmt_double(p.margin) << '\n';
    }
  }

  char line[256];
  std::snprintf(line, sizeof line, "%-26s %-15s %-19s %-19s %3s %9s %12s", "scenario", "check",
                "verdict", "expect", "ok", "time[s]", "min margin");
  log << line << '\n';
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-26s %-15s %-19s %-19s %3s %9.2f %12.4g",
                  r.name.c_str(), r.check.c_str(), r.verdict.c_str(), r.expect.c_str(),
                  r.ok ? "ok" : "NO", r.runtime_s, r.min_margin);
    log << line << '\n';
  }
  return reports;
}

inline bool all_ok(const std::vector<CheckReport>& reports) {
  for (const auto& r : reports)
    if (!r.ok) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Suite configuration

inline Scenario parse_scenario(const Json& j) {
  Scenario sc;
  if (!j.is_object() || !j.contains("name") || !j.contains("check") || !j.contains("mu"))
    fail(Errc::config_error, "scenario needs 'name', 'check' and 'mu'");
  sc.name = j.at("name").get<std::string>();
  sc.check = j.at("check").get<std::string>();
  sc.mu = parse_measure(j.at("mu"));
  if (j.contains("nu")) sc.nu = parse_measure(j.at("nu"));
  if (j.contains("level")) sc.level = j.at("level").get<int>();
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    if (g.is_number_integer())
      sc.grid = g.get<int>();
    else if (g.is_array())
      for (const auto& x : g) sc.points.push_back(x.get<double>());
    else
      fail(Errc::config_error, "grid is a point count or an array of points");
  }
  if (j.contains("tol")) sc.tol = j.at("tol").get<double>();
  if (j.contains("lambda")) sc.lambda = j.at("lambda").get<double>();
  if (j.contains("alpha")) sc.alpha = j.at("alpha").get<double>();
  if (j.contains("z")) sc.z = j.at("z").get<double>();
  if (j.contains("gap")) {
    const auto& g = j.at("gap");
    if (!g.is_array() || g.size() != 2) fail(Errc::config_error, "gap is a [lo, hi] pair");
    sc.gap_lo = g.at(0).get<double>();
    sc.gap_hi = g.at(1).get<double>();
  }
  if (j.contains("k_max")) sc.k_max = j.at("k_max").get<int>();
  if (j.contains("cap")) sc.cap = j.at("cap").get<int>();
  if (j.contains("expect")) sc.expect = j.at("expect").get<std::string>();
  if (j.contains("mode")) sc.mode = j.at("mode").get<std::string>();
  if (j.contains("hypothesis")) sc.hypothesis = j.at("hypothesis").get<std::string>();
  if (sc.expect != "pass" && sc.expect != "hypothesis-not-met" && sc.expect != "informational")
    fail(Errc::config_error, "expect must be pass, hypothesis-not-met or informational");
  if (sc.mode != "double" && sc.mode != "rational")
    fail(Errc::config_error, "mode must be double or rational");
  if (sc.level < 1 || sc.level > 32) fail(Errc::config_error, "level out of range");
  if (sc.grid < 1 && sc.points.empty()) fail(Errc::config_error, "grid must be positive");
  if (sc.k_max < 1 || sc.cap < 1) fail(Errc::config_error, "k_max and cap must be >= 1");
  return sc;
}

inline std::vector<Scenario> parse_suite(const Json& j) {
  const Json* arr = nullptr;
  if (j.is_array())
    arr = &j;
  else if (j.is_object() && j.contains("scenarios") && j.at("scenarios").is_array())
    arr = &j.at("scenarios");
  else
    fail(Errc::config_error, "suite is an array of scenarios or {\"scenarios\": [...]}");
  std::vector<Scenario> out;
  for (const auto& s : *arr) out.push_back(parse_scenario(s));
  return out;
}

inline std::vector<Scenario> load_suite(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(Errc::io_error, "cannot open suite file " + path);
  Json j = Json::parse(is, nullptr, false);
  if (j.is_discarded()) fail(Errc::config_error, "suite file " + path + " is not valid JSON");
  return parse_suite(j);
}

// The shipped scenario set: one entry per theorem-shaped claim, sized to
// finish in minutes on one core.
inline std::vector<Scenario> default_suite() {
  const double log23 = std::log(2.0) / std::log(3.0);
  const double log53 = std::log(5.0) / std::log(3.0);
  auto mk = [](const char* name, const char* check, const char* mu, const char* nu) {
    Scenario sc;
    sc.name = name;
    sc.check = check;
    sc.mu = parse_measure_text(mu);
    if (nu) sc.nu = parse_measure_text(nu);
    return sc;
  };
  const char* atoms02 = R"({"kind":"atomic","atoms":[[0,1],[2,1]]})";
  const char* atoms01 = R"({"kind":"atomic","atoms":[[0,1],[1,1]]})";
  const char* triangle = R"({"kind":"convolve","of":["lebesgue","lebesgue"]})";

  std::vector<Scenario> suite;
  {
    auto sc = mk("e33-self-interior", "interior-bound", "example33", "example33");
    sc.lambda = log53;
    sc.grid = 256;
    suite.push_back(sc);
  }
  {
    auto sc = mk("e33-self-center", "interior-bound", "example33", "example33");
    sc.lambda = std::log(4.0 / 125.0) / std::log(1.0 / 27.0);
    sc.points = {1.0};
    suite.push_back(sc);
  }
  {
    auto sc = mk("leb-cantor-interior", "interior-bound", "uniform(3)", "cantor");
    sc.lambda = 1.0;
    // estimates at fixed depth overshoot near the support edges, so the
    // tight bound 1 is checked on the middle band with a wider tolerance
    sc.points = detail::interior_grid(0.5, 1.5, 64);
    sc.tol = 0.15;
    suite.push_back(sc);
  }
  {
    auto sc = mk("leb-cantor-lower", "lower-bound", "uniform(3)", "cantor");
    sc.alpha = 1.0;
    sc.tol = 0.15;
    sc.hypothesis = "uniform measure has lower dimension exactly 1 at every point";
    suite.push_back(sc);
  }
  {
    auto sc = mk("cantor-self-lower", "lower-bound", "cantor", "cantor");
    sc.alpha = log23;
    sc.tol = 0.15;
    sc.hypothesis = "equal-weight self-similar cells give a uniform lower bound log2/log3";
    suite.push_back(sc);
  }
  {
    auto sc = mk("e33-self-lower", "lower-bound", "example33", "example33");
    sc.alpha = std::log(5.0 / 2.0) / std::log(3.0);
    sc.tol = 0.15;
    sc.hypothesis = "smallest branch exponent log(5/2)/log3 bounds every cell ratio";
    suite.push_back(sc);
  }
  {
    auto sc = mk("cantor-pair-origin", "unique-pair", "cantor", "cantor");
    sc.z = 0.0;
    sc.level = 12;
    suite.push_back(sc);
  }
  {
    auto sc = mk("leb-atoms-pair-origin", "unique-pair", "lebesgue", atoms02);
    sc.z = 0.0;
    sc.level = 12;
    suite.push_back(sc);
  }
  {
    auto sc = mk("leb-atoms-gap-wide", "gap-point", "lebesgue", atoms02);
    sc.level = 12;
    suite.push_back(sc);
  }
  {
    auto sc = mk("leb-atoms-gap-exact", "gap-point", "lebesgue", atoms01);
    sc.level = 12;
    suite.push_back(sc);
  }
  {
    auto sc = mk("triangle-atoms-gap", "gap-point", triangle, atoms02);
    sc.level = 12;
    suite.push_back(sc);
  }
  {
    auto sc = mk("triangle-atoms-hypothesis", "interior-bound", triangle, atoms02);
    sc.lambda = 2.0;
    sc.expect = "hypothesis-not-met";
    suite.push_back(sc);
  }
  {
    auto sc = mk("cantor-isolated", "isolated-point", "cantor", nullptr);
    sc.k_max = 4;
    sc.grid = 96;
    suite.push_back(sc);
  }
  {
    auto sc = mk("cantor-torus", "torus-power", "cantor", nullptr);
    sc.lambda = log23;
    sc.level = 10;
    sc.cap = 6;
    sc.k_max = 3;
    sc.grid = 128;
    suite.push_back(sc);
  }
  {
    auto sc = mk("uniform-torus", "torus-power", "uniform(3)", nullptr);
    sc.lambda = 1.0;
    sc.level = 9;
    sc.cap = 2;
    sc.k_max = 2;
    sc.grid = 64;
    // the grid point on a cell boundary halves its inner bracket, which
    // inflates shallow-window estimates by log 2 / log r
    sc.tol = 0.2;
    suite.push_back(sc);
  }
  {
    auto sc = mk("bernoulli-profile", "profile", "bernoulli(1/3)", "bernoulli(1/4)");
    sc.level = 12;
    sc.grid = 64;
    sc.expect = "informational";
    suite.push_back(sc);
  }
  return suite;
}

}  // namespace dimlab
