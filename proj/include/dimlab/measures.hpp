#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rational.hpp"

namespace dimlab {

// Self-similar measure on the line: base-m subdivision maps S_d(x) = (x+d)/m
// restricted to a digit subset, branch d carrying probability p_d.  The
// resulting measure on [0,1] is pushed through x -> scale*x + shift.
struct Branch {
  int digit = 0;
  Rat prob;
};

struct IfsMeasure {
  int base = 0;
  std::vector<Branch> branches;  // sorted by digit, digits distinct
  Rat scale = 1;
  Rat shift = 0;

  double scale_d() const { return to_double(scale); }
  double shift_d() const { return to_double(shift); }
  bool full_digit_set() const { return static_cast<int>(branches.size()) == base; }
};

struct Atom {
  Rat pos;
  Rat mass;
};

// Finite positive combination of point masses.  Total mass need not be 1
// (delta_0 + delta_2 is a legitimate input).
struct AtomicMeasure {
  std::vector<Atom> atoms;  // sorted by position, positions distinct
  Rat total;
};

inline IfsMeasure make_ifs(int base, std::vector<Branch> branches, Rat scale = 1, Rat shift = 0) {
  if (base < 2) fail(Errc::bad_base, "base must be >= 2, got " + std::to_string(base));
  if (branches.empty()) fail(Errc::prob_sum, "at least one branch required");
  std::sort(branches.begin(), branches.end(),
            [](const Branch& a, const Branch& b) { return a.digit < b.digit; });
  Rat sum = 0;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const Branch& br = branches[i];
    if (br.digit < 0 || br.digit >= base)
      fail(Errc::digit_out_of_range, "digit " + std::to_string(br.digit) + " outside [0, " +
                                         std::to_string(base) + ")");
    if (i > 0 && branches[i - 1].digit == br.digit)
      fail(Errc::duplicate_digit, "digit " + std::to_string(br.digit) + " repeated");
    if (sgn(br.prob) <= 0) fail(Errc::nonpositive_prob, "branch probabilities must be positive");
    sum += br.prob;
  }
  if (std::abs(to_double(sum) - 1.0) > 1e-12)
    fail(Errc::prob_sum, "branch probabilities sum to " + std::to_string(to_double(sum)));
  if (sgn(scale) <= 0) fail(Errc::domain_error, "normalization scale must be positive");
  return IfsMeasure{base, std::move(branches), std::move(scale), std::move(shift)};
}

inline AtomicMeasure make_atomic(std::vector<Atom> atoms) {
  if (atoms.empty()) fail(Errc::empty_atom_list, "atom list is empty");
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.pos < b.pos; });
  Rat total = 0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (sgn(atoms[i].mass) <= 0) fail(Errc::nonpositive_atom_mass, "atom masses must be positive");
    if (i > 0 && atoms[i - 1].pos == atoms[i].pos)
      fail(Errc::duplicate_position, "atom position " + rational_str(atoms[i].pos) + " repeated");
    total += atoms[i].mass;
  }
  return AtomicMeasure{std::move(atoms), std::move(total)};
}

// ---------------------------------------------------------------------------
// Support sets and gaps

struct Interval {
  double lo = 0, hi = 0;
  double len() const { return hi - lo; }
};

struct Gap {
  double lo = 0, hi = 0;
  double diam() const { return hi - lo; }
};

struct SupportSet {
  std::vector<Interval> intervals;  // disjoint, sorted
  int level = -1;                   // refinement level; -1 means exact (atomic)
  bool exact = false;

  Interval hull() const {
    if (intervals.empty()) fail(Errc::domain_error, "empty support set");
    return {intervals.front().lo, intervals.back().hi};
  }
};

inline std::vector<Gap> gaps(const SupportSet& s) {
  std::vector<Gap> out;
  for (std::size_t i = 1; i < s.intervals.size(); ++i)
    out.push_back(Gap{s.intervals[i - 1].hi, s.intervals[i].lo});
  return out;
}

namespace detail {

struct IdxRun {
  std::int64_t lo, hi;  // inclusive cell-index run
};

// Occupied level-n cells of the digit cascade, kept as merged index runs.
// Full contiguous digit sets map a run to a single child run, so uniform
// measures stay at one run per level regardless of depth.
inline std::vector<IdxRun> support_runs(const IfsMeasure& mu, int level,
                                        std::int64_t run_cap = (1 << 22)) {
  std::vector<IdxRun> dgroups;  // maximal contiguous digit ranges
  for (const Branch& br : mu.branches) {
    if (!dgroups.empty() && dgroups.back().hi + 1 == br.digit)
      dgroups.back().hi = br.digit;
    else
      dgroups.push_back({br.digit, br.digit});
  }
  const bool full = dgroups.size() == 1 && dgroups[0].lo == 0 && dgroups[0].hi == mu.base - 1;
  std::vector<IdxRun> runs{{0, 0}};
  for (int k = 0; k < level; ++k) {
    std::vector<IdxRun> next;
    auto emit = [&](std::int64_t lo, std::int64_t hi) {
      if (!next.empty() && next.back().hi + 1 >= lo)
        next.back().hi = std::max(next.back().hi, hi);
      else {
        if (static_cast<std::int64_t>(next.size()) >= run_cap)
          fail(Errc::level_too_large,
               "support enumeration exceeds run cap at level " + std::to_string(k + 1));
        next.push_back({lo, hi});
      }
    };
    for (const IdxRun& r : runs) {
      if (full) {
        emit(r.lo * mu.base, r.hi * mu.base + mu.base - 1);
        continue;
      }
      for (std::int64_t j = r.lo; j <= r.hi; ++j)
        for (const IdxRun& d : dgroups) emit(j * mu.base + d.lo, j * mu.base + d.hi);
    }
    runs = std::move(next);
  }
  return runs;
}

}  // namespace detail

// Outer cover of the attractor by level-n cells, mapped through the
// normalization.  Level 0 is the image of [0,1] by construction.
inline SupportSet support(const IfsMeasure& mu, int level) {
  if (level < 0) fail(Errc::domain_error, "negative level");
  auto runs = detail::support_runs(mu, level);
  double cell = mu.scale_d() / std::pow(static_cast<double>(mu.base), level);
  double shift = mu.shift_d();
  SupportSet s;
  s.level = level;
  s.exact = false;
  for (const auto& r : runs)
    s.intervals.push_back(Interval{shift + r.lo * cell, shift + (r.hi + 1) * cell});
  return s;
}

inline SupportSet support(const AtomicMeasure& nu) {
  SupportSet s;
  s.level = -1;
  s.exact = true;
  for (const Atom& a : nu.atoms) {
    double p = to_double(a.pos);
    s.intervals.push_back(Interval{p, p});
  }
  return s;
}

// ---------------------------------------------------------------------------
// Presets

inline IfsMeasure preset_cantor() {
  return make_ifs(3, {{0, Rat(1, 2)}, {2, Rat(1, 2)}});
}

inline IfsMeasure preset_lebesgue() {
  return make_ifs(2, {{0, Rat(1, 2)}, {1, Rat(1, 2)}});
}

inline IfsMeasure preset_example33() {
  return make_ifs(3, {{0, Rat(2, 5)}, {1, Rat(1, 5)}, {2, Rat(2, 5)}});
}

inline IfsMeasure preset_bernoulli(const Rat& p) {
  if (sgn(p) <= 0 || p >= 1) fail(Errc::domain_error, "bernoulli weight must lie in (0,1)");
  return make_ifs(2, {{0, p}, {1, Rat(1 - p)}});
}

inline IfsMeasure preset_uniform(int m) {
  std::vector<Branch> br;
  for (int d = 0; d < m; ++d) br.push_back({d, Rat(1, m)});
  return make_ifs(m, std::move(br));
}

// Accepts "cantor", "lebesgue", "example33", "bernoulli(p)", "uniform(m)".
inline IfsMeasure parse_preset(const std::string& name) {
  auto open = name.find('(');
  std::string head = open == std::string::npos ? name : name.substr(0, open);
  std::string arg;
  if (open != std::string::npos) {
    auto close = name.rfind(')');
    if (close == std::string::npos || close < open)
      fail(Errc::config_error, "malformed preset '" + name + "'");
    arg = name.substr(open + 1, close - open - 1);
  }
  if (head == "cantor") return preset_cantor();
  if (head == "lebesgue") return preset_lebesgue();
  if (head == "example33") return preset_example33();
  if (head == "bernoulli") {
    if (arg.empty()) fail(Errc::config_error, "bernoulli preset needs a weight, e.g. bernoulli(1/3)");
    return preset_bernoulli(parse_rational(arg));
  }
  if (head == "uniform") {
    if (arg.empty()) fail(Errc::config_error, "uniform preset needs a base, e.g. uniform(3)");
    Rat m = parse_rational(arg);
    if (m.get_den() != 1 || m < 2) fail(Errc::config_error, "uniform base must be an integer >= 2");
    return preset_uniform(static_cast<int>(m.get_num().get_si()));
  }
  fail(Errc::config_error, "unknown preset '" + name + "'");
}

}  // namespace dimlab
