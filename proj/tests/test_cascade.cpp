#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "dimlab/cascade.hpp"
#include "test_util.hpp"

using namespace dimlab;
using testutil::thrown_code;

TEST_CASE("refine reproduces hand-computed cascades") {
  // cantor level 2: quarters at indices 0, 2, 6, 8
  auto v = refine<Rat>(preset_cantor(), 2);
  REQUIRE(v.len() == 9);
  for (int g = 0; g <= 8; ++g) {
    Rat want = (g == 0 || g == 2 || g == 6 || g == 8) ? Rat(1, 4) : Rat(0);
    CHECK(v.at_global(g) == want);
  }
  CHECK(v.smear == 0);
  CHECK(v.total() == Rat(1));

  auto e = refine<Rat>(preset_example33(), 1);
  CHECK(e.at_global(0) == Rat(2, 5));
  CHECK(e.at_global(1) == Rat(1, 5));
  CHECK(e.at_global(2) == Rat(2, 5));

  auto l = refine<Rat>(preset_lebesgue(), 3);
  REQUIRE(l.len() == 8);
  for (int g = 0; g < 8; ++g) CHECK(l.at_global(g) == Rat(1, 8));

  // bernoulli(1/2) is lebesgue under another name
  auto b = refine<Rat>(preset_bernoulli(Rat(1, 2)), 3);
  for (int g = 0; g < 8; ++g) CHECK(b.at_global(g) == l.at_global(g));
}

TEST_CASE("refine conserves mass exactly") {
  for (int level : {0, 1, 4, 7}) {
    CHECK(refine<Rat>(preset_example33(), level).total() == Rat(1));
    CHECK(refine<Rat>(preset_cantor(), level).total() == Rat(1));
  }
  CHECK(std::abs(to_double(refine<double>(preset_example33(), 10).total()) - 1.0) < 1e-12);
}

TEST_CASE("refining one level deeper aggregates back") {
  auto mu = preset_example33();
  for (int level : {1, 3, 5}) {
    auto coarse = refine<Rat>(mu, level);
    auto fine = refine<Rat>(mu, level + 1);
    for (std::int64_t g = 0; g < coarse.len(); ++g) {
      Rat block = 0;
      for (int d = 0; d < mu.base; ++d) block += fine.at_global(g * mu.base + d);
      CHECK(block == coarse.at_global(g));
    }
  }
}

TEST_CASE("refine rejects oversized grids") {
  CHECK(thrown_code([] { refine<double>(preset_uniform(3), 18); }) == Errc::level_too_large);
  CHECK(refine<double>(preset_uniform(3), 16).len() == 43046721);
}

TEST_CASE("deep sparse refines stay sparse") {
  auto v = refine<double>(preset_cantor(), 14);
  CHECK(v.sparse);
  CHECK(v.nnz() == 16384);  // 2^14 occupied cells
  CHECK(v.len() == 4782969);
}

TEST_CASE("atomic refinement lands atoms on the lattice") {
  auto nu = make_atomic({{Rat(0), Rat(1)}, {Rat(2), Rat(1)}});
  auto v = refine_atomic<Rat>(nu, 3, 1);
  CHECK(v.len() == 7);
  CHECK(v.at_global(0) == Rat(1));
  CHECK(v.at_global(6) == Rat(1));
  CHECK(v.total() == Rat(2));
  CHECK(v.smear == 0);

  // half is not a triadic lattice point at any level
  auto bad = make_atomic({{Rat(1, 2), Rat(1)}});
  CHECK(thrown_code([&] { refine_atomic<Rat>(bad, 3, 4); }) == Errc::atom_off_lattice);
  // but it is a dyadic one
  auto ok = refine_atomic<Rat>(bad, 2, 3);
  CHECK(ok.at_global(4) == Rat(1));

  // negative positions shift the offset
  auto neg = make_atomic({{Rat(-1), Rat(1)}, {Rat(1), Rat(2)}});
  auto vn = refine_atomic<Rat>(neg, 3, 2);
  CHECK(vn.offset_idx == -9);
  CHECK(vn.at_global(-9) == Rat(1));
  CHECK(vn.at_global(9) == Rat(2));
}

TEST_CASE("ball brackets behave at the cantor endpoint") {
  auto mu = preset_cantor();
  for (int n : {4, 8}) {
    auto v = refine<Rat>(mu, n);
    const double h = v.cell_width();
    // closed-ball mass at radius 3^-j is exactly 2^-j; the bracket must hold it
    for (int j = 1; j < n; ++j) {
      double r = std::pow(3.0, -j);
      auto b = ball_mass(v, 0.0, r);
      Rat truth(1, 1 << j);
      CHECK(b.lower <= truth);
      CHECK(b.upper >= truth);
    }
    // radius 2h strictly contains exactly the first cell
    auto b2 = ball_mass(v, 0.0, 2 * h);
    CHECK(b2.lower == Rat(1, 1 << n));
    CHECK(b2.upper >= b2.lower);
  }
}

TEST_CASE("ball brackets widen with the radius") {
  auto v = refine<double>(preset_example33(), 8);
  for (int i = 0; i < 50; ++i) {
    double x = testutil::uniform(-0.2, 1.2);
    double r1 = testutil::uniform(1e-5, 0.3);
    double r2 = r1 * testutil::uniform(1.0, 4.0);
    auto b1 = ball_mass(v, x, r1);
    auto b2 = ball_mass(v, x, r2);
    CHECK(b1.lower <= b2.lower + 1e-15);
    CHECK(b1.upper <= b2.upper + 1e-15);
    CHECK(b1.lower <= b1.upper);
  }
  CHECK(thrown_code([&] { ball_mass(v, 0.5, 0.0); }) == Errc::nonpositive_radius);
}

TEST_CASE("deeper levels give nested brackets") {
  // refined vectors: cell spans at level n+1 sit inside their parents, so
  // brackets can only tighten (exact in rational mode)
  auto mu = preset_example33();
  for (int n : {2, 4, 6}) {
    auto coarse = refine<Rat>(mu, n);
    auto fine = refine<Rat>(mu, n + 1);
    for (int i = 0; i < 25; ++i) {
      double x = testutil::uniform(0.0, 1.0);
      double r = testutil::uniform(0.01, 0.5);
      auto bc = ball_mass(coarse, x, r);
      auto bf = ball_mass(fine, x, r);
      CHECK(bf.lower >= bc.lower);
      CHECK(bf.upper <= bc.upper);
    }
  }
}

TEST_CASE("smear widens the accounting spans") {
  auto v = refine<Rat>(preset_cantor(), 5);
  auto smeared = v;
  smeared.smear = 2;
  for (int i = 0; i < 25; ++i) {
    double x = testutil::uniform(0.0, 1.0);
    double r = testutil::uniform(0.05, 0.4);
    auto b0 = ball_mass(v, x, r);
    auto b1 = ball_mass(smeared, x, r);
    CHECK(b1.lower <= b0.lower);
    CHECK(b1.upper >= b0.upper);
  }
}

TEST_CASE("vector support matches measure support") {
  auto mu = preset_cantor();
  auto v = refine<double>(mu, 3);
  auto sv = support_of_vector(v);
  auto sm = support(mu, 3);
  REQUIRE(sv.intervals.size() == sm.intervals.size());
  for (std::size_t i = 0; i < sv.intervals.size(); ++i) {
    CHECK(sv.intervals[i].lo == Catch::Approx(sm.intervals[i].lo).margin(1e-12));
    CHECK(sv.intervals[i].hi == Catch::Approx(sm.intervals[i].hi).margin(1e-12));
  }
}

TEST_CASE("csv round trip preserves vectors") {
  auto v = refine<double>(preset_cantor(), 5);
  std::ostringstream os;
  dump_csv(v, os);
  std::istringstream is(os.str());
  auto w = load_csv<double>(is);
  CHECK(w.base == v.base);
  CHECK(w.level == v.level);
  CHECK(w.smear == v.smear);
  CHECK(w.offset_idx == v.offset_idx);
  for (std::int64_t g = 0; g < v.len(); ++g) CHECK(w.at_global(g) == v.at_global(g));

  // byte determinism
  std::ostringstream os2;
  dump_csv(v, os2);
  CHECK(os.str() == os2.str());
}

TEST_CASE("csv round trip is exact in rational mode") {
  auto nu = make_atomic({{Rat(-1), Rat(1, 3)}, {Rat(2), Rat(2, 3)}});
  auto v = refine_atomic<Rat>(nu, 3, 2);
  std::ostringstream os;
  dump_csv(v, os);
  std::istringstream is(os.str());
  auto w = load_csv<Rat>(is);
  CHECK(w.offset_idx == v.offset_idx);
  CHECK(w.at_global(-9) == Rat(1, 3));
  CHECK(w.at_global(18) == Rat(2, 3));
  CHECK(w.total() == Rat(1));
}

TEST_CASE("csv loader rejects malformed input") {
  auto code = [](const std::string& text) {
    return thrown_code([&] {
      std::istringstream is(text);
      load_csv<double>(is);
    });
  };
  CHECK(code("nonsense\n") == Errc::io_error);
  CHECK(code("base,level,offset,smear,total\n3,2,0,0\n") == Errc::io_error);
  CHECK(code("base,level,offset,smear,total\n3,2,0,0,1\nindex,mass\n") == Errc::io_error);
  // total disagreeing with the rows
  CHECK(code("base,level,offset,smear,total\n3,1,0,0,1\nindex,mass\n0,0.25\n") == Errc::io_error);
  // negative mass
  CHECK(code("base,level,offset,smear,total\n3,1,0,0,0\nindex,mass\n0,-0.25\n") == Errc::io_error);
}

