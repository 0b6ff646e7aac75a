#include <catch2/catch_amalgamated.hpp>
#include <cstdint>
#include <random>
#include <vector>

#include "dimlab/cascade.hpp"
#include "dimlab/convolve.hpp"
#include "dimlab/measures.hpp"

using namespace dimlab;

namespace {

// Deterministic corpus: 200 instances over bases {2,3,5}, at most 4 branches,
// exact rational weights w_i / sum(w).
struct Instance {
  IfsMeasure mu;
  IfsMeasure nu;  // second measure on the same base, for convolution laws
  int level = 3;
};

std::vector<Instance> corpus() {
  std::mt19937_64 rng(0x5eedf00dULL);
  const int bases[] = {2, 3, 5};
  std::vector<Instance> out;
  auto random_ifs = [&](int base) {
    const int max_branches = std::min(base, 4);
    std::uniform_int_distribution<int> nb(1, max_branches);
    std::uniform_int_distribution<int> wgt(1, 9);
    int n = nb(rng);
    std::vector<int> digits(static_cast<std::size_t>(base));
    for (int d = 0; d < base; ++d) digits[static_cast<std::size_t>(d)] = d;
    std::shuffle(digits.begin(), digits.end(), rng);
    std::vector<Branch> br;
    long wsum = 0;
    std::vector<int> ws;
    for (int i = 0; i < n; ++i) {
      ws.push_back(wgt(rng));
      wsum += ws.back();
    }
    for (int i = 0; i < n; ++i)
      br.push_back({digits[static_cast<std::size_t>(i)], Rat(ws[static_cast<std::size_t>(i)]) / Rat(wsum)});
    return make_ifs(base, std::move(br));
  };
  for (int c = 0; c < 200; ++c) {
    int base = bases[c % 3];
    Instance inst;
    inst.mu = random_ifs(base);
    inst.nu = random_ifs(base);
    inst.level = base == 5 ? 2 + c % 2 : 2 + c % 3;
    out.push_back(std::move(inst));
  }
  return out;
}

const Rat kOne = Rat(1);

bool same_vector(const MassVector<Rat>& a, const MassVector<Rat>& b) {
  if (a.base != b.base || a.level != b.level || a.smear != b.smear) return false;
  std::int64_t lo = std::min(a.offset_idx, b.offset_idx);
  std::int64_t hi = std::max(a.offset_idx + a.length, b.offset_idx + b.length);
  for (std::int64_t g = lo; g < hi; ++g)
    if (a.at_global(g) != b.at_global(g)) return false;
  return true;
}

}  // namespace

TEST_CASE("random cascade instances satisfy the structural invariants") {
  auto cases = corpus();
  REQUIRE(cases.size() == 200);
  std::mt19937_64 rng(0xabcdef12ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  int conserved = 0, aggregated = 0, monotone = 0, commuted = 0, nested = 0;
  for (const auto& inst : cases) {
    const int n = inst.level;
    auto v = refine<Rat>(inst.mu, n);
    auto v1 = refine<Rat>(inst.mu, n + 1);
    auto w = refine<Rat>(inst.nu, n);

    // mass conservation at every level and through convolution
    bool ok_mass = v.total() == kOne && v1.total() == kOne;
    auto c = convolve(v, w);
    ok_mass = ok_mass && c.total() == kOne;
    conserved += ok_mass;

    // each level-n cell is the sum of its base children one level deeper
    bool ok_agg = true;
    for (std::int64_t g = v.offset_idx; g < v.offset_idx + v.length; ++g) {
      Rat sum = 0;
      for (std::int64_t d = 0; d < v.base; ++d) sum += v1.at_global(g * v.base + d);
      if (sum != v.at_global(g)) {
        ok_agg = false;
        break;
      }
    }
    aggregated += ok_agg;

    // bracket endpoints grow with the radius
    bool ok_mono = true;
    for (int q = 0; q < 10 && ok_mono; ++q) {
      double x = unit(rng);
      double r1 = (0.25 + unit(rng)) * v.cell_width();
      double r2 = r1 + (0.25 + unit(rng)) * v.cell_width();
      auto b1 = ball_mass(v, x, r1);
      auto b2 = ball_mass(v, x, r2);
      ok_mono = b1.lower <= b2.lower && b1.upper <= b2.upper;
    }
    monotone += ok_mono;

    // convolution commutes cell for cell in exact arithmetic
    commuted += same_vector(c, convolve(w, v));

    // deeper brackets nest inside shallower ones at a fixed radius, both for
    // the plain cascade and for the smeared convolution
    bool ok_nest = true;
    auto w1 = refine<Rat>(inst.nu, n + 1);
    auto c1 = convolve(v1, w1);
    for (int q = 0; q < 10 && ok_nest; ++q) {
      double x = unit(rng);
      double r = (1.0 + unit(rng)) * (v.smear + 1) * v.cell_width();
      auto outer = ball_mass(v, x, r);
      auto inner = ball_mass(v1, x, r);
      ok_nest = outer.lower <= inner.lower && inner.upper <= outer.upper &&
                inner.lower <= inner.upper;
      double z = 2 * unit(rng);
      double rc = (1.0 + unit(rng)) * (c.smear + 1) * c.cell_width();
      auto co = ball_mass(c, z, rc);
      auto ci = ball_mass(c1, z, rc);
      ok_nest = ok_nest && co.lower <= ci.lower && ci.upper <= co.upper;
    }
    nested += ok_nest;
  }
  CHECK(conserved == 200);
  CHECK(aggregated == 200);
  CHECK(monotone == 200);
  CHECK(commuted == 200);
  CHECK(nested == 200);
}
