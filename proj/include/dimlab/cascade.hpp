#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "measures.hpp"
#include "rational.hpp"

namespace dimlab {

inline constexpr std::int64_t kDefaultCellCap = std::int64_t(1) << 26;
inline constexpr double kSparseOccupancy = 0.05;

// Discretization of a measure at one cascade level.  Cell j (global index
// g = offset_idx + j) has left edge shift + g*h with h = scale * base^-level.
// The smear field bounds rightward mass spread: the mass recorded at cell g
// lies somewhere in [g*h, (g+1+smear)*h) (frame offsets applied).  Refined
// vectors have smear 0; each convolution adds smear(a)+smear(b)+1.
template <class T>
struct MassVector {
  std::int64_t base = 0;
  int level = 0;
  int smear = 0;
  std::int64_t offset_idx = 0;
  double scale = 1.0;
  double shift = 0.0;
  bool cyclic = false;  // indices live on Z/(base^level), span exactly [0,1)
  double err_bound = 0.0;  // accumulated fp error bound from inexact paths

  bool sparse = false;
  std::int64_t length = 0;         // cells spanned
  std::vector<T> dense;            // length entries when !sparse
  std::vector<std::int64_t> sidx;  // sorted local indices when sparse
  std::vector<T> sval;

  std::int64_t len() const { return length; }
  std::int64_t nnz() const {
    if (sparse) return static_cast<std::int64_t>(sidx.size());
    std::int64_t n = 0;
    for (const T& v : dense)
      if (!is_zero(v)) ++n;
    return n;
  }

  double cell_width() const {
    double p = 1.0;
    for (int i = 0; i < level; ++i) p *= static_cast<double>(base);
    return scale / p;
  }

  T total() const {
    T s = scalar_from_int<T>(0);
    if (sparse)
      for (const T& v : sval) s += v;
    else
      for (const T& v : dense) s += v;
    return s;
  }

  // Value at global cell index g (zero outside the stored span).
  T at_global(std::int64_t g) const {
    std::int64_t j = g - offset_idx;
    if (cyclic) {
      j = ((g % length) + length) % length;
    } else if (j < 0 || j >= length) {
      return scalar_from_int<T>(0);
    }
    if (!sparse) return dense[static_cast<std::size_t>(j)];
    auto it = std::lower_bound(sidx.begin(), sidx.end(), j);
    if (it != sidx.end() && *it == j) return sval[static_cast<std::size_t>(it - sidx.begin())];
    return scalar_from_int<T>(0);
  }

  void to_dense() {
    if (!sparse) return;
    dense.assign(static_cast<std::size_t>(length), scalar_from_int<T>(0));
    for (std::size_t k = 0; k < sidx.size(); ++k)
      dense[static_cast<std::size_t>(sidx[k])] = sval[k];
    sidx.clear();
    sval.clear();
    sidx.shrink_to_fit();
    sval.shrink_to_fit();
    sparse = false;
  }

  void to_sparse() {
    if (sparse) return;
    sidx.clear();
    sval.clear();
    for (std::int64_t j = 0; j < length; ++j)
      if (!is_zero(dense[static_cast<std::size_t>(j)])) {
        sidx.push_back(j);
        sval.push_back(dense[static_cast<std::size_t>(j)]);
      }
    dense.clear();
    dense.shrink_to_fit();
    sparse = true;
  }

  void sparsify_if_worth() {
    if (sparse || length == 0) return;
    if (static_cast<double>(nnz()) <= kSparseOccupancy * static_cast<double>(length)) to_sparse();
  }
};

inline std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// ---------------------------------------------------------------------------
// Refinement

// Level-n cell masses of the cascade: cell index is the base-m digit string,
// mass the product of branch probabilities along it.
template <class T>
MassVector<T> refine(const IfsMeasure& mu, int level, std::int64_t cell_cap = kDefaultCellCap) {
  if (level < 0) fail(Errc::domain_error, "negative level");
  std::int64_t cells = 1;
  for (int i = 0; i < level; ++i) {
    cells *= mu.base;
    if (cells > cell_cap)
      fail(Errc::level_too_large, "base^level exceeds cell cap at level " + std::to_string(level));
  }
  MassVector<T> v;
  v.base = mu.base;
  v.level = level;
  v.smear = 0;
  v.offset_idx = 0;
  v.scale = mu.scale_d();
  v.shift = mu.shift_d();
  v.length = cells;

  std::vector<T> probs;
  probs.reserve(mu.branches.size());
  for (const Branch& br : mu.branches) {
    if constexpr (std::is_same_v<T, double>)
      probs.push_back(to_double(br.prob));
    else
      probs.push_back(br.prob);
  }

  double occ = std::pow(static_cast<double>(mu.branches.size()) / mu.base, level);
  if (occ > kSparseOccupancy || mu.full_digit_set()) {
    std::vector<T> cur(1, scalar_from_int<T>(1));
    for (int k = 0; k < level; ++k) {
      std::vector<T> next(cur.size() * mu.base, scalar_from_int<T>(0));
      for (std::size_t j = 0; j < cur.size(); ++j) {
        if (is_zero(cur[j])) continue;
        for (std::size_t b = 0; b < mu.branches.size(); ++b)
          next[j * mu.base + mu.branches[b].digit] = cur[j] * probs[b];
      }
      cur = std::move(next);
    }
    v.dense = std::move(cur);
    v.sparsify_if_worth();
  } else {
    std::vector<std::int64_t> idx(1, 0);
    std::vector<T> val(1, scalar_from_int<T>(1));
    for (int k = 0; k < level; ++k) {
      std::vector<std::int64_t> nidx;
      std::vector<T> nval;
      nidx.reserve(idx.size() * mu.branches.size());
      nval.reserve(idx.size() * mu.branches.size());
      for (std::size_t j = 0; j < idx.size(); ++j) {
        for (std::size_t b = 0; b < mu.branches.size(); ++b) {
          nidx.push_back(idx[j] * mu.base + mu.branches[b].digit);
          nval.push_back(val[j] * probs[b]);
        }
      }
      idx = std::move(nidx);
      val = std::move(nval);
    }
    v.sparse = true;
    v.sidx = std::move(idx);
    v.sval = std::move(val);
  }
  return v;
}

// Atoms snapped to the level-n lattice (absolute tolerance 1e-9 in the user
// frame).  Exact: no smear, frame scale 1 / shift 0.
template <class T>
MassVector<T> refine_atomic(const AtomicMeasure& nu, int base, int level,
                            std::int64_t cell_cap = kDefaultCellCap) {
  if (base < 2) fail(Errc::bad_base, "base must be >= 2");
  if (level < 0) fail(Errc::domain_error, "negative level");
  (void)cell_cap;  // sparse storage: span length is metadata only
  Rat scale_n = Rat(ipow(base, level));
  std::vector<std::pair<std::int64_t, T>> cells;
  for (const Atom& a : nu.atoms) {
    Rat t = a.pos * scale_n;
    Rat k = Rat(mpz_class(t.get_num() / t.get_den()));  // trunc toward zero
    if (t < 0 && k != t) k -= 1;                        // floor
    Rat best = k;
    if (t - k > Rat(1, 2)) best = k + 1;
    Rat dist = abs(t - best) / scale_n;
    if (dist > parse_rational("1/1000000000"))
      fail(Errc::atom_off_lattice, "atom at " + rational_str(a.pos) +
                                       " is off the level-" + std::to_string(level) + " lattice");
    std::int64_t g = best.get_num().get_si();
    T m;
    if constexpr (std::is_same_v<T, double>)
      m = to_double(a.mass);
    else
      m = a.mass;
    cells.emplace_back(g, m);
  }
  std::sort(cells.begin(), cells.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  MassVector<T> v;
  v.base = base;
  v.level = level;
  v.smear = 0;
  v.sparse = true;
  v.offset_idx = cells.front().first;
  v.length = cells.back().first - cells.front().first + 1;
  for (const auto& [g, m] : cells) {
    std::int64_t j = g - v.offset_idx;
    if (!v.sidx.empty() && v.sidx.back() == j)
      v.sval.back() += m;  // distinct atoms snapped to one cell aggregate
    else {
      v.sidx.push_back(j);
      v.sval.push_back(m);
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Ball-mass brackets

template <class T>
struct BallBracket {
  T lower;  // mass certainly inside the open ball B(x,r)
  T upper;  // mass possibly intersecting the closed ball
};

namespace detail {

// Sum of cells with local index in [lo, hi] (clipped).
template <class T>
T range_sum(const MassVector<T>& v, std::int64_t lo, std::int64_t hi) {
  lo = std::max<std::int64_t>(lo, 0);
  hi = std::min<std::int64_t>(hi, v.length - 1);
  T s = scalar_from_int<T>(0);
  if (lo > hi) return s;
  if (!v.sparse) {
    for (std::int64_t j = lo; j <= hi; ++j) s += v.dense[static_cast<std::size_t>(j)];
  } else {
    auto it = std::lower_bound(v.sidx.begin(), v.sidx.end(), lo);
    for (; it != v.sidx.end() && *it <= hi; ++it)
      s += v.sval[static_cast<std::size_t>(it - v.sidx.begin())];
  }
  return s;
}

// Cyclic variant: global index range [lo, hi] reduced mod length.
template <class T>
T range_sum_cyclic(const MassVector<T>& v, std::int64_t lo, std::int64_t hi) {
  if (hi - lo + 1 >= v.length) return v.total();
  std::int64_t n = v.length;
  std::int64_t a = ((lo % n) + n) % n;
  std::int64_t b = ((hi % n) + n) % n;
  if (a <= b) return range_sum(v, a, b);
  T s = range_sum(v, a, n - 1);
  s += range_sum(v, 0, b);
  return s;
}

struct IdxWindow {
  std::int64_t lo_in, hi_in;    // strictly-inside range
  std::int64_t lo_out, hi_out;  // possibly-intersecting range
};

// Index windows for ball (x-r, x+r) against cells [g, g+1+s] * h + shift.
// The radius arrives in cell units: rho_d for the double branch (slack
// guarded), rho_q for the rational branch (exact, so probes that sit on a
// cell boundary resolve deterministically).
template <class T>
IdxWindow ball_windows_units(const MassVector<T>& v, double x, double rho_d, const Rat& rho_q) {
  const int s = v.smear;
  if constexpr (std::is_same_v<T, double>) {
    double t = (x - v.shift) / v.cell_width();
    double rho = rho_d;
    double slack = 64.0 * std::numeric_limits<double>::epsilon() *
                   (std::abs(t) + rho + 2.0 + s);
    IdxWindow w;
    w.lo_in = static_cast<std::int64_t>(std::floor(t - rho + slack)) + 1;
    w.hi_in = static_cast<std::int64_t>(std::ceil(t + rho - 1 - s - slack)) - 1;
    w.lo_out = static_cast<std::int64_t>(std::ceil(t - rho - 1 - s - slack));
    w.hi_out = static_cast<std::int64_t>(std::floor(t + rho + slack));
    return w;
  } else {
    Rat hx = rat_from_double(v.scale) / Rat(ipow(v.base, v.level));
    Rat t = (rat_from_double(x) - rat_from_double(v.shift)) / hx;
    const Rat& rho = rho_q;
    auto floor_q = [](const Rat& q) {
      mpz_class f = q.get_num() / q.get_den();
      if (q < 0 && Rat(f) != q) f -= 1;
      return f.get_si();
    };
    auto ceil_q = [&floor_q](const Rat& q) {
      std::int64_t f = floor_q(q);
      return Rat(f) == q ? f : f + 1;
    };
    IdxWindow w;
    // strict: g > t - rho  and  g < t + rho - 1 - s
    w.lo_in = floor_q(t - rho) + 1;
    w.hi_in = ceil_q(t + rho - 1 - s) - 1;
    // closed: g <= t + rho  and  g >= t - rho - 1 - s
    w.lo_out = ceil_q(t - rho - 1 - s);
    w.hi_out = floor_q(t + rho);
    return w;
  }
}

template <class T>
BallBracket<T> bracket_from_windows(const MassVector<T>& v, const IdxWindow& w) {
  BallBracket<T> b;
  if (v.cyclic) {
    if (v.smear >= v.length) {
      b.lower = scalar_from_int<T>(0);
      b.upper = v.total();
      return b;
    }
    b.lower = range_sum_cyclic(v, w.lo_in, w.hi_in);
    if (w.hi_in < w.lo_in) b.lower = scalar_from_int<T>(0);
    b.upper = range_sum_cyclic(v, w.lo_out, w.hi_out);
    if (w.hi_out < w.lo_out) b.upper = scalar_from_int<T>(0);
    return b;
  }
  b.lower = range_sum(v, w.lo_in - v.offset_idx, w.hi_in - v.offset_idx);
  b.upper = range_sum(v, w.lo_out - v.offset_idx, w.hi_out - v.offset_idx);
  return b;
}

}  // namespace detail

// Two-sided bracket for the measure of a ball around x of radius r.  Lower
// sums cells whose whole possible span sits strictly inside the open ball;
// upper sums cells whose span touches the closed ball.
template <class T>
BallBracket<T> ball_mass(const MassVector<T>& v, double x, double r) {
  if (!(r > 0)) fail(Errc::nonpositive_radius, "radius must be positive");
  if constexpr (std::is_same_v<T, double>) {
    auto w = detail::ball_windows_units(v, x, r / v.cell_width(), Rat());
    return detail::bracket_from_windows(v, w);
  } else {
    Rat hx = rat_from_double(v.scale) / Rat(ipow(v.base, v.level));
    auto w = detail::ball_windows_units(v, x, 0.0, rat_from_double(r) / hx);
    return detail::bracket_from_windows(v, w);
  }
}

// Same bracket with the radius given as an exact multiple of the cell width.
// Level-indexed probes use this so the rational path never inherits the ulp
// error of a double radius at an integer cell multiple.
template <class T>
BallBracket<T> ball_mass_cells(const MassVector<T>& v, double x, const Rat& rho_cells) {
  if (!(rho_cells > 0)) fail(Errc::nonpositive_radius, "radius must be positive");
  auto w = detail::ball_windows_units(v, x, to_double(rho_cells), rho_cells);
  return detail::bracket_from_windows(v, w);
}

// ---------------------------------------------------------------------------
// Support recovered from a vector (smear-aware spans, merged)

template <class T>
SupportSet support_of_vector(const MassVector<T>& v) {
  const double h = v.cell_width();
  SupportSet s;
  s.level = v.level;
  s.exact = false;
  const double fuzz = h * 1e-12;
  auto push = [&](std::int64_t j) {
    double lo = v.shift + (v.offset_idx + j) * h;
    double hi = v.shift + (v.offset_idx + j + 1 + v.smear) * h;
    if (!s.intervals.empty() && lo <= s.intervals.back().hi + fuzz)
      s.intervals.back().hi = std::max(s.intervals.back().hi, hi);
    else
      s.intervals.push_back(Interval{lo, hi});
  };
  if (v.sparse) {
    for (std::size_t k = 0; k < v.sidx.size(); ++k)
      if (!is_zero(v.sval[k])) push(v.sidx[k]);
  } else {
    for (std::int64_t j = 0; j < v.length; ++j)
      if (!is_zero(v.dense[static_cast<std::size_t>(j)])) push(j);
  }
  if (s.intervals.empty()) fail(Errc::domain_error, "vector carries no mass");
  return s;
}

// True when the smear-aware spans of the nonzero cells cover the whole circle.
template <class T>
bool covers_circle(const MassVector<T>& v) {
  if (!v.cyclic) fail(Errc::span_mismatch, "covers_circle needs a cyclic vector");
  if (v.smear >= v.length) return true;
  std::vector<std::int64_t> nz;
  if (v.sparse) {
    for (std::size_t k = 0; k < v.sidx.size(); ++k)
      if (!is_zero(v.sval[k])) nz.push_back(v.sidx[k]);
  } else {
    for (std::int64_t j = 0; j < v.length; ++j)
      if (!is_zero(v.dense[static_cast<std::size_t>(j)])) nz.push_back(j);
  }
  if (nz.empty()) return false;
  // gap between consecutive occupied cells must not exceed the span width
  for (std::size_t k = 0; k < nz.size(); ++k) {
    std::int64_t cur = nz[k];
    std::int64_t nxt = k + 1 < nz.size() ? nz[k + 1] : nz[0] + v.length;
    if (nxt - cur > 1 + v.smear) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// CSV round trip
//
//   base,level,offset,smear,total
//   3,2,0,0,1
//   index,mass
//   0,0.25
//   ...
//
// Only frame-trivial linear vectors (scale 1, shift 0, not cyclic) are
// dumpable; offset is the real coordinate of the left edge.

namespace detail {

inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class T>
std::string fmt_scalar(const T& x) {
  if constexpr (std::is_same_v<T, double>)
    return fmt_double(x);
  else
    return rational_str(x);
}

template <class T>
T parse_scalar(const std::string& s) {
  if constexpr (std::is_same_v<T, double>) {
    if (s.find('/') == std::string::npos) return std::stod(s);
    return parse_rational(s).get_d();
  } else {
    return parse_rational(s);
  }
}

}  // namespace detail

template <class T>
void dump_csv(const MassVector<T>& v, std::ostream& os) {
  if (v.cyclic || v.scale != 1.0 || v.shift != 0.0)
    fail(Errc::span_mismatch, "only plain-frame linear vectors are dumpable");
  os << "base,level,offset,smear,total\n";
  const Rat h = Rat(1) / Rat(ipow(v.base, v.level));
  const Rat offset = Rat(v.offset_idx) * h;
  os << v.base << ',' << v.level << ',';
  if constexpr (std::is_same_v<T, double>)
    os << detail::fmt_double(to_double(offset));
  else
    os << rational_str(offset);
  os << ',' << v.smear << ',' << detail::fmt_scalar(v.total()) << '\n';
  os << "index,mass\n";
  auto row = [&](std::int64_t j, const T& m) {
    if (!is_zero(m)) os << (v.offset_idx + j) << ',' << detail::fmt_scalar(m) << '\n';
  };
  if (v.sparse)
    for (std::size_t k = 0; k < v.sidx.size(); ++k) row(v.sidx[k], v.sval[k]);
  else
    for (std::int64_t j = 0; j < v.length; ++j) row(j, v.dense[static_cast<std::size_t>(j)]);
}

template <class T>
void dump_csv_file(const MassVector<T>& v, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(Errc::io_error, "cannot open " + path + " for writing");
  dump_csv(v, os);
}

template <class T>
MassVector<T> load_csv(std::istream& is) try {
  std::string line;
  if (!std::getline(is, line) || line.rfind("base,level,offset,smear,total", 0) != 0)
    fail(Errc::io_error, "missing vector header line");
  if (!std::getline(is, line)) fail(Errc::io_error, "missing vector metadata row");
  std::vector<std::string> parts;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) parts.push_back(tok);
  }
  if (parts.size() != 5) fail(Errc::io_error, "metadata row needs 5 fields");
  MassVector<T> v;
  v.base = std::stoll(parts[0]);
  v.level = std::stoi(parts[1]);
  Rat offset = parse_rational(parts[2]);
  v.smear = std::stoi(parts[3]);
  T total = detail::parse_scalar<T>(parts[4]);
  if (v.base < 2 || v.level < 0 || v.smear < 0) fail(Errc::io_error, "bad vector metadata");
  const Rat h = Rat(1) / Rat(ipow(v.base, v.level));
  Rat oidx = offset / h;
  mpz_class onear;
  mpz_class rem = oidx.get_num() % oidx.get_den();
  onear = oidx.get_num() / oidx.get_den();
  if (abs(Rat(rem, oidx.get_den())) > Rat(1, 2)) onear += sgn(oidx) > 0 ? 1 : -1;
  if (abs(oidx - Rat(onear)) * h > parse_rational("1/1000000000"))
    fail(Errc::io_error, "offset is off the level lattice");
  v.offset_idx = onear.get_si();
  if (!std::getline(is, line) || line.rfind("index,mass", 0) != 0)
    fail(Errc::io_error, "missing index,mass header");
  std::vector<std::pair<std::int64_t, T>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) fail(Errc::io_error, "malformed mass row '" + line + "'");
    T m = detail::parse_scalar<T>(line.substr(comma + 1));
    if (to_double(m) < 0) fail(Errc::io_error, "negative mass row");
    rows.emplace_back(std::stoll(line.substr(0, comma)), std::move(m));
  }
  if (rows.empty()) fail(Errc::io_error, "vector has no mass rows");
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  v.offset_idx = std::min(v.offset_idx, rows.front().first);
  v.length = rows.back().first - v.offset_idx + 1;
  v.sparse = true;
  T sum = scalar_from_int<T>(0);
  for (auto& [g, m] : rows) {
    if (!v.sidx.empty() && v.sidx.back() == g - v.offset_idx)
      fail(Errc::io_error, "duplicate index " + std::to_string(g));
    v.sidx.push_back(g - v.offset_idx);
    v.sval.push_back(m);
    sum += m;
  }
  if (std::abs(to_double(sum) - to_double(total)) > 1e-9 * std::max(1.0, std::abs(to_double(total))))
    fail(Errc::io_error, "mass rows disagree with recorded total");
  if (static_cast<double>(v.nnz()) > kSparseOccupancy * static_cast<double>(v.length)) v.to_dense();
  return v;
} catch (const Error&) {
  throw;
} catch (const std::exception& e) {
  fail(Errc::io_error, std::string("malformed vector file: ") + e.what());
}

template <class T>
MassVector<T> load_csv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(Errc::io_error, "cannot open " + path);
  return load_csv<T>(is);
}

}  // namespace dimlab
