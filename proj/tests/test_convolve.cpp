#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dimlab/convolve.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

using namespace dimlab;
using testutil::thrown_code;

namespace {

MassVector<double> random_dense(int base, int level, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  MassVector<double> v;
  v.base = base;
  v.level = level;
  v.length = ipow(base, level);
  v.dense.resize(static_cast<std::size_t>(v.length));
  for (auto& x : v.dense) x = dist(gen);
  return v;
}

}  // namespace

TEST_CASE("five smooth transform lengths") {
  CHECK(detail::next_fast_len(1) == 1);
  CHECK(detail::next_fast_len(7) == 8);
  CHECK(detail::next_fast_len(121) == 125);
  CHECK(detail::next_fast_len(9565937) == 9565938);  // 2 * 3^14
}

TEST_CASE("convolving with a point mass shifts and bumps smear") {
  auto a = refine<Rat>(preset_example33(), 3);
  MassVector<Rat> delta;
  delta.base = 3;
  delta.level = 3;
  delta.length = 1;
  delta.offset_idx = 5;
  delta.dense = {Rat(1)};
  auto c = convolve(a, delta);
  CHECK(c.smear == 1);
  CHECK(c.offset_idx == 5);
  CHECK(c.len() == a.len());
  for (std::int64_t g = 0; g < a.len(); ++g) CHECK(c.at_global(5 + g) == a.at_global(g));
}

TEST_CASE("lebesgue squared gives triangle weights") {
  auto l = refine<Rat>(preset_lebesgue(), 3);
  auto c = convolve(l, l);
  REQUIRE(c.len() == 15);
  for (std::int64_t k = 0; k < 15; ++k) {
    Rat want = Rat(std::min<std::int64_t>(k + 1, 15 - k)) / 64;
    CHECK(c.at_global(k) == want);
  }
  // ball mass near the density peak: triangle integral over [0.9, 1.1]
  auto deep = convolve(refine<double>(preset_lebesgue(), 12), refine<double>(preset_lebesgue(), 12));
  auto b = ball_mass(deep, 1.0, 0.1);
  const double truth = 2 * 0.1 - 0.1 * 0.1;
  CHECK(b.lower <= truth + 1e-12);
  CHECK(b.upper >= truth - 1e-12);
  CHECK(b.upper - b.lower < 0.01);
}

TEST_CASE("convolution is commutative and bilinear in exact mode") {
  auto a = refine<Rat>(preset_cantor(), 4);
  auto b = refine<Rat>(preset_example33(), 4);
  auto ab = convolve(a, b);
  auto ba = convolve(b, a);
  REQUIRE(ab.len() == ba.len());
  for (std::int64_t g = 0; g < ab.len(); ++g) CHECK(ab.at_global(g) == ba.at_global(g));
  CHECK(ab.total() == Rat(1));

  // b split into two halves recombines linearly
  MassVector<Rat> b1 = b, b2 = b;
  b1.to_dense();
  b2.to_dense();
  for (std::int64_t j = 0; j < b.len(); ++j) {
    if (j % 2 == 0)
      b2.dense[static_cast<std::size_t>(j)] = 0;
    else
      b1.dense[static_cast<std::size_t>(j)] = 0;
  }
  auto c1 = convolve(a, b1);
  auto c2 = convolve(a, b2);
  for (std::int64_t g = 0; g < ab.len(); ++g)
    CHECK(ab.at_global(g) == c1.at_global(g) + c2.at_global(g));
}

TEST_CASE("totals multiply and offsets add") {
  auto nu = make_atomic({{Rat(1), Rat(2)}});
  auto a = refine_atomic<Rat>(nu, 3, 2);  // offset 9
  auto b = refine<Rat>(preset_cantor(), 2);
  auto c = convolve(a, b);
  CHECK(c.offset_idx == 9);
  CHECK(c.total() == Rat(2));
  CHECK(c.smear == 1);
  auto d = refine<double>(preset_example33(), 6);
  auto dd = convolve(d, d);
  CHECK(std::abs(to_double(dd.total()) - 1.0) < 1e-12);
}

TEST_CASE("smear telescopes through powers") {
  auto a = refine<Rat>(preset_cantor(), 3);
  for (int k : {1, 2, 3, 4}) {
    auto p = convolve_power(a, k);
    CHECK(p.smear == k * (a.smear + 1) - 1);
    CHECK(p.total() == Rat(1));
  }
  auto c2 = convolve(a, a);
  auto c3 = convolve(c2, a);
  CHECK(c3.smear == 2);
  auto p3 = convolve_power(a, 3);
  for (std::int64_t g = 0; g < c3.len(); ++g) CHECK(p3.at_global(g) == c3.at_global(g));
}

TEST_CASE("atomic convolution is the exact shift path") {
  auto nu = make_atomic({{Rat(0), Rat(1)}, {Rat(2), Rat(1)}});
  auto v = refine<Rat>(preset_cantor(), 4);
  auto fast = convolve_atomic(v, nu);
  auto generic = convolve(v, refine_atomic<Rat>(nu, 3, 4));
  CHECK(fast.smear == v.smear);          // exact translation
  CHECK(generic.smear == v.smear + 1);   // generic bound cannot know better
  REQUIRE(fast.len() == generic.len());
  for (std::int64_t g = fast.offset_idx; g < fast.offset_idx + fast.len(); ++g)
    CHECK(fast.at_global(g) == generic.at_global(g));
  CHECK(fast.total() == Rat(2));
  // off-lattice atom refuses
  auto bad = make_atomic({{Rat(1, 7), Rat(1)}});
  CHECK(thrown_code([&] { convolve_atomic(v, bad); }) == Errc::atom_off_lattice);
}

TEST_CASE("fft path agrees with direct summation") {
  for (int len : {1000, 4096, 8192}) {
    auto a = random_dense(2, 13, 11u + len);
    auto b = random_dense(2, 13, 22u + len);
    a.length = len;
    a.dense.resize(len);
    b.length = len;
    b.dense.resize(len);
    std::vector<double> direct(2 * len - 1, 0.0);
    detail::direct_accumulate(a, b, direct);
    std::vector<double> fft(2 * len - 1, 0.0);
    detail::fft_accumulate(a.dense, b.dense, fft, to_double(a.total()) * to_double(b.total()));
    double worst = 0;
    for (std::size_t k = 0; k < direct.size(); ++k) {
      double scale = std::max(1.0, std::abs(direct[k]));
      worst = std::max(worst, std::abs(direct[k] - fft[k]) / scale);
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("integrated dispatch picks fft for large dense operands") {
  auto a = random_dense(2, 14, 77u);  // 16384 cells, nnz^2 well past the cutoff
  auto b = random_dense(2, 14, 78u);
  auto c = convolve(a, b);
  std::vector<double> direct(static_cast<std::size_t>(c.length), 0.0);
  detail::direct_accumulate(a, b, direct);
  double worst = 0;
  for (std::int64_t k = 0; k < c.length; ++k) {
    double scale = std::max(1.0, std::abs(direct[static_cast<std::size_t>(k)]));
    worst = std::max(worst,
                     std::abs(direct[static_cast<std::size_t>(k)] - c.at_global(k)) / scale);
  }
  CHECK(worst < 1e-10);
  CHECK(c.err_bound > 0);  // inexact path reports its error budget
}

TEST_CASE("uniform window kernel matches direct summation exactly") {
  auto u = refine<Rat>(preset_uniform(3), 5);
  auto s = refine<Rat>(preset_cantor(), 5);
  const std::int64_t out_len = u.length + s.length - 1;
  std::vector<Rat> direct(static_cast<std::size_t>(out_len), Rat(0));
  detail::direct_accumulate(u, s, direct);
  std::vector<Rat> window(static_cast<std::size_t>(out_len), Rat(0));
  std::int64_t run_lo, run_len;
  Rat uval;
  REQUIRE(detail::uniform_run(u, run_lo, run_len, uval));
  CHECK(run_lo == 0);
  CHECK(run_len == u.length);
  detail::uniform_window_accumulate(run_lo, run_len, uval, s, out_len, window);
  for (std::int64_t k = 0; k < out_len; ++k)
    CHECK(window[static_cast<std::size_t>(k)] == direct[static_cast<std::size_t>(k)]);
}

TEST_CASE("integrated dispatch uses the window path for uniform operands") {
  // 3^9 cells on both sides: past the small cutoff and past the pair budget
  auto ud = refine<double>(preset_uniform(3), 9);
  auto sd = refine<double>(preset_example33(), 9);
  auto cd = convolve(ud, sd);
  CHECK(cd.err_bound == 0.0);  // window bookkeeping is not a transform
  std::vector<double> direct(static_cast<std::size_t>(cd.length), 0.0);
  detail::direct_accumulate(ud, sd, direct);
  double worst = 0;
  for (std::int64_t k = 0; k < cd.length; ++k) {
    double want = direct[static_cast<std::size_t>(k)];
    worst = std::max(worst, std::abs(cd.at_global(k) - want) / std::max(1e-30, want));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("cyclic wrap folds mass mod one") {
  auto nu = make_atomic({{Rat(1, 9), Rat(1)}, {Rat(10, 9), Rat(2)}, {Rat(-8, 9), Rat(4)}});
  auto v = refine_atomic<Rat>(nu, 3, 2);
  auto c = to_cyclic(v);
  REQUIRE(c.cyclic);
  CHECK(c.len() == 9);
  CHECK(c.at_global(1) == Rat(7));  // all three atoms are 1/9 mod 1
  CHECK(c.total() == Rat(7));
}

TEST_CASE("cyclic convolution is the folded linear one") {
  auto a = refine<Rat>(preset_cantor(), 3);
  auto lin = convolve(a, a);
  auto cyc = convolve_cyclic(to_cyclic(a), to_cyclic(a));
  const std::int64_t N = 27;
  for (std::int64_t g = 0; g < N; ++g) {
    Rat folded = 0;
    for (std::int64_t k = g; k < lin.len(); k += N) folded += lin.at_global(k);
    CHECK(cyc.at_global(g) == folded);
  }
  CHECK(cyc.smear == 1);
  CHECK(cyc.total() == Rat(1));
}

TEST_CASE("cyclic fft path matches direct") {
  auto a = random_dense(2, 13, 5u);
  auto b = random_dense(2, 13, 6u);
  a.cyclic = b.cyclic = true;
  auto c = convolve_cyclic(a, b);  // 8192^2 products forces the transform
  const std::int64_t N = a.length;
  std::vector<double> direct(static_cast<std::size_t>(N), 0.0);
  for (std::int64_t i = 0; i < N; ++i)
    for (std::int64_t j = 0; j < N; ++j)
      direct[static_cast<std::size_t>((i + j) % N)] += a.dense[i] * b.dense[j];
  double worst = 0;
  for (std::int64_t k = 0; k < N; ++k) {
    double scale = std::max(1.0, direct[static_cast<std::size_t>(k)]);
    worst = std::max(worst,
                     std::abs(direct[static_cast<std::size_t>(k)] - c.at_global(k)) / scale);
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("mismatched operands refuse") {
  auto a = refine<double>(preset_cantor(), 3);
  auto b = refine<double>(preset_lebesgue(), 3);
  CHECK(thrown_code([&] { convolve(a, b); }) == Errc::base_mismatch);
  auto c = refine<double>(preset_cantor(), 4);
  CHECK(thrown_code([&] { convolve(a, c); }) == Errc::level_mismatch);
  auto cy = to_cyclic(a);
  CHECK(thrown_code([&] { convolve(a, cy); }) == Errc::span_mismatch);
  CHECK(thrown_code([&] { convolve_cyclic(a, a); }) == Errc::span_mismatch);
  CHECK(thrown_code([&] { convolve_power(a, 0); }) == Errc::domain_error);
}

TEST_CASE("implementation brackets contain the oracle brackets") {
  auto mu = preset_cantor();
  auto nu = preset_example33();
  const int level = 4;
  auto oc = oracle::convolve(oracle::refine(mu, level), oracle::refine(nu, level));

  auto impl_q = convolve(refine<Rat>(mu, level), refine<Rat>(nu, level));
  auto impl_d = convolve(refine<double>(mu, level), refine<double>(nu, level));
  REQUIRE(impl_q.smear == oc.smear);

  for (int i = 0; i < 100; ++i) {
    double z = testutil::uniform(-0.3, 2.3);
    double r = std::exp(testutil::uniform(std::log(1e-4), std::log(1.0)));
    auto want = oracle::ball(oc, z, r);
    auto got_q = ball_mass(impl_q, z, r);
    CHECK(got_q.lower <= want.lower);
    CHECK(got_q.upper >= want.upper);
    auto got_d = ball_mass(impl_d, z, r);
    const double fuzz = 1e-10;
    CHECK(got_d.lower <= to_double(want.lower) + fuzz);
    CHECK(got_d.upper >= to_double(want.upper) - fuzz);
  }
}
