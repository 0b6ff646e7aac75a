#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "dimlab/cascade.hpp"
#include "dimlab/convolve.hpp"
#include "dimlab/locdim.hpp"
#include "dimlab/measures.hpp"
#include "test_util.hpp"

using namespace dimlab;
using testutil::thrown_code;

namespace {

template <class T>
std::vector<MassVector<T>> stack_of(const IfsMeasure& mu, int lo, int hi) {
  std::vector<MassVector<T>> out;
  for (int n = lo; n <= hi; ++n) out.push_back(refine<T>(mu, n));
  return out;
}

constexpr double kCantorDim = 0.63092975357145743;  // log 2 / log 3

}  // namespace

TEST_CASE("endpoint profile of the half-half base-3 measure is exact per level") {
  auto st = stack_of<Rat>(preset_cantor(), 1, 10);
  auto p = dim_profile(st, 0.0);
  REQUIRE(p.rows.size() == 10);
  for (const auto& row : p.rows) {
    // ball of radius h at the left endpoint meets exactly the first cell
    CHECK(row.upper == std::pow(0.5, row.level));
    CHECK(row.lower == 0.0);  // the open ball never contains a closed cell here
    CHECK(std::abs(row.d_lower - kCantorDim) < 1e-12);
    CHECK(row.d_upper == kInf);
  }
  CHECK(p.upper_unbounded);
  CHECK(p.upper_dim_est == kInf);
  CHECK(std::abs(p.lower_dim_est - kCantorDim) < 1e-12);
  // midpoints are half the upper bracket, an affine shift, so the fitted
  // slope is the dimension with no truncation term at all
  CHECK(std::abs(p.slope_est - kCantorDim) < 1e-9);
}

TEST_CASE("interior profile of the uniform base-2 measure has slope one") {
  auto st = stack_of<double>(preset_lebesgue(), 1, 12);
  auto p = dim_profile(st, 0.37);
  CHECK(std::abs(p.slope_est - 1.0) < 0.02);
  CHECK(p.lower_dim_est < 1.0);  // one-sided estimates straddle
  CHECK(p.upper_dim_est >= 1.0);
  CHECK(!p.upper_unbounded);
  for (const auto& row : p.rows) {
    CHECK(row.lower > 0);
    CHECK(row.lower <= row.upper);
  }
}

TEST_CASE("streaming profiler matches the batch profile row for row") {
  auto st = stack_of<double>(preset_example33(), 1, 8);
  GridProfiler<double> g({0.2, 0.5, 0.8});
  for (const auto& v : st) g.add_level(v);
  auto profs = g.finalize();
  REQUIRE(profs.size() == 3);
  for (const auto& gp : profs) {
    auto bp = dim_profile(st, gp.x);
    REQUIRE(gp.rows.size() == bp.rows.size());
    for (std::size_t i = 0; i < gp.rows.size(); ++i) {
      CHECK(gp.rows[i].r == bp.rows[i].r);
      CHECK(gp.rows[i].lower == bp.rows[i].lower);
      CHECK(gp.rows[i].upper == bp.rows[i].upper);
    }
    CHECK(gp.slope_est == bp.slope_est);
  }
}

TEST_CASE("profiler rejects non-increasing level feeds") {
  auto v2 = refine<double>(preset_cantor(), 2);
  auto v5 = refine<double>(preset_cantor(), 5);
  GridProfiler<double> g({0.0});
  g.add_level(v5);
  CHECK(thrown_code([&] { g.add_level(v2); }) == Errc::level_mismatch);
  CHECK(thrown_code([&] { g.add_level(v5); }) == Errc::level_mismatch);
}

TEST_CASE("profile guards: outside hull and empty brackets") {
  auto st = stack_of<double>(preset_cantor(), 1, 4);
  CHECK(thrown_code([&] { dim_profile(st, 1.5); }) == Errc::point_outside_hull);
  CHECK(thrown_code([&] { dim_profile(st, -0.4); }) == Errc::point_outside_hull);
  // a sub-cell radius in the central gap sees no mass at any level
  ProfileOpts opts;
  opts.radius_mult = 0.4;
  CHECK(thrown_code([&] { dim_profile(st, 0.5, opts); }) == Errc::all_brackets_zero);
}

TEST_CASE("endpoint dimensions are closed-form") {
  auto c = dim_at_left_endpoint(preset_cantor());
  CHECK(c.exact);
  CHECK(std::abs(c.value - kCantorDim) < 1e-15);
  CHECK(dim_at_right_endpoint(preset_cantor()).value == c.value);

  auto e = preset_example33();
  double want = std::log(2.0 / 5.0) / std::log(1.0 / 3.0);
  CHECK(std::abs(dim_at_left_endpoint(e).value - want) < 1e-15);
  CHECK(std::abs(dim_at_right_endpoint(e).value - want) < 1e-15);

  auto b = preset_bernoulli(Rat(1) / 4);
  CHECK(std::abs(dim_at_left_endpoint(b).value - 2.0) < 1e-15);
  CHECK(std::abs(dim_at_right_endpoint(b).value -
                 std::log(4.0 / 3.0) / std::log(2.0)) < 1e-15);
}

TEST_CASE("corner dimension adds the endpoint values") {
  auto a = dim_at_left_endpoint(preset_cantor());
  auto s = corner_dim(a, a);
  CHECK(s.exact);
  CHECK(std::abs(s.value - 2 * kCantorDim) < 1e-14);
  CHECK(s.lo == s.value);
  CHECK(s.hi == s.value);
}

TEST_CASE("unique-pair sandwich agrees with the convolved profile at zero") {
  const int deep = 12;
  auto st = stack_of<Rat>(preset_cantor(), 1, deep);
  auto pm = dim_profile(st, 0.0);
  auto pair = unique_pair_dim(pm, pm);
  CHECK(pair.x == 0.0);
  CHECK(std::abs(pair.slope_est - 2 * kCantorDim) < 1e-9);
  CHECK(std::abs(pair.lower_dim_est - 2 * kCantorDim) < 1e-9);
  CHECK(pair.upper_unbounded);
  REQUIRE(pair.rows.size() == pm.rows.size());
  for (std::size_t i = 0; i < pair.rows.size(); ++i) {
    CHECK(pair.rows[i].upper == pm.rows[i].upper * pm.rows[i].upper);
    CHECK(pair.rows[i].lower == 0.0);
  }

  std::vector<MassVector<Rat>> cst;
  for (int n = 1; n <= deep; ++n) {
    auto v = refine<Rat>(preset_cantor(), n);
    cst.push_back(convolve(v, v));
  }
  auto pc = dim_profile(cst, 0.0);
  CHECK(std::abs(pc.slope_est - 2 * kCantorDim) < 1e-9);
  CHECK(std::abs(pc.slope_est - pair.slope_est) < 1e-9);
  // the convolved ball at doubled radius dominates the product bracket
  for (std::size_t i = 0; i < pair.rows.size(); ++i) {
    CHECK(pc.rows[i].r == 2 * pm.rows[i].r);
    CHECK(pc.rows[i].upper >= pair.rows[i].upper);
  }
}

TEST_CASE("gap point, case 1: gap wider than the support") {
  // quarter-length copy of the half-half measure against the unit one
  auto mu = make_ifs(3, {{0, Rat(1) / 2}, {2, Rat(1) / 2}}, Rat(1) / 4);
  auto nu = preset_cantor();
  const int deep = 12;
  auto stm = stack_of<Rat>(mu, 1, deep);
  auto stn = stack_of<Rat>(nu, 1, deep);
  auto pm_right = dim_profile(stm, 0.25);
  auto pm_left = dim_profile(stm, 0.0);
  auto pn_b = dim_profile(stn, 1.0 / 3.0);
  auto pn_c = dim_profile(stn, 2.0 / 3.0);
  auto res = gap_point_dim(pm_right, pm_left, pn_b, pn_c, 1.0 / 3.0, 0.25);
  CHECK(res.case_id == 1);
  CHECK(std::abs(res.profile.x - (0.25 + 1.0 / 3.0)) < 1e-12);
  CHECK(std::abs(res.profile.slope_est - 2 * kCantorDim) < 0.05);
  CHECK(!res.equality_observed);
}

TEST_CASE("gap point, case 2: gap exactly fits the support") {
  auto mu = make_ifs(3, {{0, Rat(1) / 2}, {2, Rat(1) / 2}}, Rat(1) / 3);
  auto nu = preset_cantor();
  const int deep = 12;
  auto stm = stack_of<Rat>(mu, 1, deep);
  auto stn = stack_of<Rat>(nu, 1, deep);
  auto pm_right = dim_profile(stm, 1.0 / 3.0);
  auto pm_left = dim_profile(stm, 0.0);
  auto pn_b = dim_profile(stn, 1.0 / 3.0);
  auto pn_c = dim_profile(stn, 2.0 / 3.0);
  auto res = gap_point_dim(pm_right, pm_left, pn_b, pn_c, 1.0 / 3.0, 1.0 / 3.0);
  CHECK(res.case_id == 2);
  REQUIRE(!res.profile.rows.empty());
  // combined rows are the sums of the two product brackets
  for (std::size_t i = 0; i < res.profile.rows.size(); ++i) {
    const auto& row = res.profile.rows[i];
    int lev = row.level;
    auto find = [&](const DimProfile& p) -> const ProfileRow& {
      for (const auto& r : p.rows)
        if (r.level == lev) return r;
      FAIL("level missing from source profile");
      return p.rows.front();
    };
    const auto& r1 = find(pm_right);
    const auto& r2 = find(pn_b);
    const auto& r3 = find(pm_left);
    const auto& r4 = find(pn_c);
    CHECK(row.lower == r1.lower * r2.lower + r3.lower * r4.lower);
    CHECK(row.upper == r1.upper * r2.upper + r3.upper * r4.upper);
  }
  CHECK(std::abs(res.profile.slope_est - 2 * kCantorDim) < 0.05);
  CHECK(std::isfinite(res.pair_sum_right));
  CHECK(std::isfinite(res.pair_sum_left));
  CHECK(res.equality_observed);
}

TEST_CASE("gap point guards") {
  auto nu = preset_cantor();
  auto stn = stack_of<Rat>(nu, 1, 6);
  auto pn_b = dim_profile(stn, 1.0 / 3.0);
  auto pn_c = dim_profile(stn, 2.0 / 3.0);
  auto pr = dim_profile(stn, 1.0);
  auto pl = dim_profile(stn, 0.0);
  // unit-length support against a gap of one third
  CHECK(thrown_code([&] { gap_point_dim(pr, pl, pn_b, pn_c, 1.0 / 3.0, 1.0); }) ==
        Errc::gap_too_small);
  // exact-fit geometry whose two pairs target different points
  auto mu = make_ifs(3, {{0, Rat(1) / 2}, {2, Rat(1) / 2}}, Rat(1) / 3);
  auto stm = stack_of<Rat>(mu, 1, 6);
  auto pm_right = dim_profile(stm, 1.0 / 3.0);
  auto pm_left = dim_profile(stm, 0.0);
  auto pn_wrong = dim_profile(stn, 0.8);
  CHECK(thrown_code([&] {
          gap_point_dim(pm_right, pm_left, pn_b, pn_wrong, 1.0 / 3.0, 1.0 / 3.0);
        }) == Errc::decomposition_mismatch);
}

TEST_CASE("decomposition bound minimizes over candidates") {
  std::vector<std::vector<std::pair<double, DimValue>>> cands;
  cands.push_back({{0.25, exact_dim(0.6)}, {0.75, exact_dim(0.8)}});
  cands.push_back({{0.5, exact_dim(0.5)}, {0.5, exact_dim(0.55)}});
  auto b = decomposition_bound(1.0, cands);
  CHECK(std::abs(b.hi - 1.05) < 1e-12);
  CHECK(std::abs(b.value - 1.05) < 1e-12);

  cands.push_back({{0.4, exact_dim(0.1)}, {0.5, exact_dim(0.1)}});
  CHECK(thrown_code([&] { decomposition_bound(1.0, cands); }) ==
        Errc::decomposition_mismatch);
  CHECK(thrown_code([&] { decomposition_bound(1.0, {}); }) == Errc::degenerate_weights);
}

TEST_CASE("profile collapses to a dim value") {
  auto st = stack_of<double>(preset_lebesgue(), 1, 10);
  auto p = dim_profile(st, 0.3);
  auto v = dim_value_of(p);
  CHECK(!v.exact);
  CHECK(v.value == p.slope_est);
  CHECK(v.lo == p.lower_dim_est);
  CHECK(v.hi == p.upper_dim_est);
}
