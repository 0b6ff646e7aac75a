#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "cascade.hpp"
#include "errors.hpp"

namespace dimlab {

inline constexpr std::int64_t kDirectLenCutoff = 4096;

namespace detail {

// Smallest 5-smooth integer >= n (FFT-friendly transform length).
inline std::int64_t next_fast_len(std::int64_t n) {
  if (n <= 1) return 1;
  const std::int64_t lim = 2 * n;
  std::int64_t best = -1;
  for (std::int64_t p2 = 1; p2 <= lim; p2 *= 2) {
    for (std::int64_t p23 = p2; p23 <= lim; p23 *= 3) {
      for (std::int64_t p235 = p23; p235 <= lim; p235 *= 5) {
        if (p235 >= n && (best < 0 || p235 < best)) best = p235;
      }
    }
  }
  return best;
}

template <class T>
struct CellIter {
  // Unified traversal of dense or sparse payloads: calls f(j, value).
  template <class F>
  static void each(const MassVector<T>& v, F&& f) {
    if (v.sparse) {
      for (std::size_t k = 0; k < v.sidx.size(); ++k)
        if (!is_zero(v.sval[k])) f(v.sidx[k], v.sval[k]);
    } else {
      for (std::int64_t j = 0; j < v.length; ++j)
        if (!is_zero(v.dense[static_cast<std::size_t>(j)]))
          f(j, v.dense[static_cast<std::size_t>(j)]);
    }
  }
};

// Detects a dense vector that is one contiguous run of identical values.
template <class T>
bool uniform_run(const MassVector<T>& v, std::int64_t& run_lo, std::int64_t& run_len, T& val) {
  if (v.sparse) return false;
  std::int64_t first = -1, last = -1;
  for (std::int64_t j = 0; j < v.length; ++j)
    if (!is_zero(v.dense[static_cast<std::size_t>(j)])) {
      first = j;
      break;
    }
  if (first < 0) return false;
  for (std::int64_t j = v.length - 1; j >= 0; --j)
    if (!is_zero(v.dense[static_cast<std::size_t>(j)])) {
      last = j;
      break;
    }
  const T& u = v.dense[static_cast<std::size_t>(first)];
  for (std::int64_t j = first; j <= last; ++j)
    if (!(v.dense[static_cast<std::size_t>(j)] == u)) return false;
  run_lo = first;
  run_len = last - first + 1;
  val = u;
  return true;
}

template <class T>
void direct_accumulate(const MassVector<T>& a, const MassVector<T>& b, std::vector<T>& out) {
  CellIter<T>::each(a, [&](std::int64_t i, const T& av) {
    CellIter<T>::each(b, [&](std::int64_t j, const T& bv) {
      out[static_cast<std::size_t>(i + j)] += av * bv;
    });
  });
}

// c_k = u * sum of b over the window k-M+1..k (exact window bookkeeping,
// long-double accumulator in double mode, exact in rational mode).
template <class T>
void uniform_window_accumulate(std::int64_t run_lo, std::int64_t run_len, const T& u,
                               const MassVector<T>& b, std::int64_t out_len,
                               std::vector<T>& out) {
  std::vector<std::int64_t> bidx;
  std::vector<const T*> bval;
  CellIter<T>::each(b, [&](std::int64_t j, const T& bv) {
    bidx.push_back(j);
    bval.push_back(&bv);
  });
  std::size_t add_p = 0, sub_p = 0;
  if constexpr (std::is_same_v<T, double>) {
    long double acc = 0;
    for (std::int64_t k = run_lo; k < out_len; ++k) {
      std::int64_t w_hi = k - run_lo;          // b-index entering the window
      std::int64_t w_lo = w_hi - run_len;      // b-index leaving the window
      while (add_p < bidx.size() && bidx[add_p] <= w_hi) acc += *bval[add_p++];
      while (sub_p < bidx.size() && bidx[sub_p] <= w_lo) acc -= *bval[sub_p++];
      double c = u * static_cast<double>(acc);
      out[static_cast<std::size_t>(k)] = c > 0 ? c : 0.0;
    }
  } else {
    T acc = scalar_from_int<T>(0);
    for (std::int64_t k = run_lo; k < out_len; ++k) {
      std::int64_t w_hi = k - run_lo;
      std::int64_t w_lo = w_hi - run_len;
      while (add_p < bidx.size() && bidx[add_p] <= w_hi) acc += *bval[add_p++];
      while (sub_p < bidx.size() && bidx[sub_p] <= w_lo) acc -= *bval[sub_p++];
      out[static_cast<std::size_t>(k)] = u * acc;
    }
  }
}

// FFT convolution of the dense payloads (double mode only).  Small negative
// excursions from roundoff are clamped; the clamp magnitude and the scattered
// positive noise floor feed the error report.
inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;  // FFTW planning is not thread-safe; execution is
  return m;
}

inline double fft_accumulate(const std::vector<double>& a, const std::vector<double>& b,
                             std::vector<double>& out, double total_product) {
  const std::int64_t L = static_cast<std::int64_t>(out.size());
  const std::int64_t N = next_fast_len(L);
  double* ra = fftw_alloc_real(static_cast<std::size_t>(N));
  double* rb = fftw_alloc_real(static_cast<std::size_t>(N));
  fftw_complex* ca = fftw_alloc_complex(static_cast<std::size_t>(N / 2 + 1));
  fftw_complex* cb = fftw_alloc_complex(static_cast<std::size_t>(N / 2 + 1));
  std::fill(ra, ra + N, 0.0);
  std::fill(rb, rb + N, 0.0);
  std::copy(a.begin(), a.end(), ra);
  std::copy(b.begin(), b.end(), rb);
  fftw_plan pa, pb;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    pa = fftw_plan_dft_r2c_1d(static_cast<int>(N), ra, ca, FFTW_ESTIMATE);
    pb = fftw_plan_dft_r2c_1d(static_cast<int>(N), rb, cb, FFTW_ESTIMATE);
  }
  fftw_execute(pa);
  fftw_execute(pb);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(pa);
    fftw_destroy_plan(pb);
  }
  const double inv = 1.0 / static_cast<double>(N);
  for (std::int64_t k = 0; k <= N / 2; ++k) {
    double re = ca[k][0] * cb[k][0] - ca[k][1] * cb[k][1];
    double im = ca[k][0] * cb[k][1] + ca[k][1] * cb[k][0];
    ca[k][0] = re * inv;
    ca[k][1] = im * inv;
  }
  fftw_free(rb);
  fftw_free(cb);
  fftw_plan pc;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    pc = fftw_plan_dft_c2r_1d(static_cast<int>(N), ca, ra, FFTW_ESTIMATE);
  }
  fftw_execute(pc);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(pc);
  }
  const double clamp = 1e-15 * total_product;
  double worst_neg = 0;
  for (std::int64_t k = 0; k < L; ++k) {
    double c = ra[k];
    if (c < 0) {
      worst_neg = std::max(worst_neg, -c);
      c = 0;
    }
    out[static_cast<std::size_t>(k)] = c;
  }
  fftw_free(ra);
  fftw_free(ca);
  return std::max(worst_neg, clamp);
}

template <class T>
void check_conv_compat(const MassVector<T>& a, const MassVector<T>& b) {
  if (a.base != b.base) fail(Errc::base_mismatch, "operands use different bases");
  if (a.level != b.level) fail(Errc::level_mismatch, "operands refined to different levels");
  if (a.scale != b.scale) fail(Errc::span_mismatch, "operands use different cell widths");
}

}  // namespace detail

// Discrete convolution: c_k = sum_{i+j=k} a_i b_j.  Frame offsets add, the
// smear bound grows by smear(a)+smear(b)+1 because the sum of two cell spans
// spreads one extra cell to the right.
template <class T>
MassVector<T> convolve(const MassVector<T>& a, const MassVector<T>& b) {
  detail::check_conv_compat(a, b);
  if (a.cyclic || b.cyclic) fail(Errc::span_mismatch, "linear convolve on cyclic operand");
  MassVector<T> c;
  c.base = a.base;
  c.level = a.level;
  c.smear = a.smear + b.smear + 1;
  c.offset_idx = a.offset_idx + b.offset_idx;
  c.scale = a.scale;
  c.shift = a.shift + b.shift;
  c.length = a.length + b.length - 1;
  const double ta = to_double(a.total()), tb = to_double(b.total());
  c.err_bound = a.err_bound * tb + b.err_bound * ta;

  std::vector<T> out(static_cast<std::size_t>(c.length), scalar_from_int<T>(0));
  const double nnz_product = static_cast<double>(a.nnz()) * static_cast<double>(b.nnz());
  const bool small = std::max(a.length, b.length) < kDirectLenCutoff;

  std::int64_t run_lo = 0, run_len = 0;
  T uval = scalar_from_int<T>(0);
  if (small || nnz_product <= 1e7) {
    detail::direct_accumulate(a, b, out);
  } else if (detail::uniform_run(a, run_lo, run_len, uval)) {
    detail::uniform_window_accumulate(run_lo, run_len, uval, b, c.length, out);
  } else if (detail::uniform_run(b, run_lo, run_len, uval)) {
    detail::uniform_window_accumulate(run_lo, run_len, uval, a, c.length, out);
  } else {
    const double fft_cost = 40.0 * static_cast<double>(c.length) *
                            std::log2(static_cast<double>(c.length) + 2);
    if constexpr (std::is_same_v<T, double>) {
      if (nnz_product <= std::max(4 * fft_cost, 1e7)) {
        detail::direct_accumulate(a, b, out);
      } else {
        MassVector<T> ad, bd;
        const std::vector<double>* pa = &a.dense;
        const std::vector<double>* pb = &b.dense;
        if (a.sparse) {
          ad = a;
          ad.to_dense();
          pa = &ad.dense;
        }
        if (b.sparse) {
          bd = b;
          bd.to_dense();
          pb = &bd.dense;
        }
        c.err_bound += detail::fft_accumulate(*pa, *pb, out, ta * tb);
      }
    } else {
      detail::direct_accumulate(a, b, out);  // exact mode never approximates
    }
  }
  c.dense = std::move(out);
  c.sparsify_if_worth();
  return c;
}

// Translation by atoms is exact: no smear growth, each atom contributes a
// shifted copy weighted by its mass.  Atom positions must sit on the level
// lattice of v (tolerance 1e-9, user frame).
template <class T>
MassVector<T> convolve_atomic(const MassVector<T>& v, const AtomicMeasure& nu) {
  if (v.cyclic) fail(Errc::span_mismatch, "linear convolve on cyclic operand");
  const Rat h = rat_from_double(v.scale) / Rat(ipow(v.base, v.level));
  std::vector<std::int64_t> shifts;
  std::vector<T> weights;
  for (const Atom& at : nu.atoms) {
    Rat t = at.pos / h;
    mpz_class k = t.get_num() / t.get_den();
    if (t < 0 && Rat(k) != t) k -= 1;
    Rat best(k);
    if (t - best > Rat(1, 2)) best += 1;
    if (abs(t - best) * h > parse_rational("1/1000000000"))
      fail(Errc::atom_off_lattice,
           "atom at " + rational_str(at.pos) + " is off the level-" +
               std::to_string(v.level) + " lattice");
    shifts.push_back(best.get_num().get_si());
    if constexpr (std::is_same_v<T, double>)
      weights.push_back(to_double(at.mass));
    else
      weights.push_back(at.mass);
  }
  const std::int64_t kmin = *std::min_element(shifts.begin(), shifts.end());
  const std::int64_t kmax = *std::max_element(shifts.begin(), shifts.end());
  MassVector<T> c;
  c.base = v.base;
  c.level = v.level;
  c.smear = v.smear;
  c.offset_idx = v.offset_idx + kmin;
  c.scale = v.scale;
  c.shift = v.shift;
  c.err_bound = v.err_bound * to_double(nu.total);
  c.length = v.length + (kmax - kmin);
  const double occ_est = static_cast<double>(v.nnz()) * static_cast<double>(nu.atoms.size());
  if (occ_est <= kSparseOccupancy * static_cast<double>(c.length)) {
    // gather shifted sparse copies, combine by index
    std::vector<std::pair<std::int64_t, T>> rows;
    detail::CellIter<T>::each(v, [&](std::int64_t j, const T& mv) {
      for (std::size_t s = 0; s < shifts.size(); ++s)
        rows.emplace_back(j + shifts[s] - kmin, mv * weights[s]);
    });
    std::sort(rows.begin(), rows.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    c.sparse = true;
    for (auto& [j, m] : rows) {
      if (!c.sidx.empty() && c.sidx.back() == j)
        c.sval.back() += m;
      else {
        c.sidx.push_back(j);
        c.sval.push_back(std::move(m));
      }
    }
  } else {
    c.dense.assign(static_cast<std::size_t>(c.length), scalar_from_int<T>(0));
    detail::CellIter<T>::each(v, [&](std::int64_t j, const T& mv) {
      for (std::size_t s = 0; s < shifts.size(); ++s)
        c.dense[static_cast<std::size_t>(j + shifts[s] - kmin)] += mv * weights[s];
    });
    c.sparsify_if_worth();
  }
  return c;
}

template <class T>
MassVector<T> convolve_atomic(const AtomicMeasure& nu, const MassVector<T>& v) {
  return convolve_atomic(v, nu);
}

// Wraps a span-[0,1) vector onto the circle; general linear vectors fold
// indices mod base^level.
template <class T>
MassVector<T> to_cyclic(const MassVector<T>& v) {
  if (v.cyclic) return v;
  if (v.scale != 1.0) fail(Errc::span_mismatch, "cyclic wrap needs unit scale");
  const std::int64_t N = ipow(v.base, v.level);
  MassVector<T> c;
  c.base = v.base;
  c.level = v.level;
  c.smear = static_cast<int>(std::min<std::int64_t>(v.smear, N));
  c.offset_idx = 0;
  c.scale = 1.0;
  c.shift = 0.0;
  c.cyclic = true;
  c.err_bound = v.err_bound;
  c.length = N;
  c.dense.assign(static_cast<std::size_t>(N), scalar_from_int<T>(0));
  // fold the frame shift into the index if it sits on the lattice
  const Rat h = Rat(1) / Rat(N);
  Rat sh = rat_from_double(v.shift) / h;
  if (sh.get_den() != 1)
    fail(Errc::span_mismatch, "frame shift off the lattice; cannot wrap");
  const std::int64_t s0 = sh.get_num().get_si();
  detail::CellIter<T>::each(v, [&](std::int64_t j, const T& mv) {
    std::int64_t g = (((v.offset_idx + j + s0) % N) + N) % N;
    c.dense[static_cast<std::size_t>(g)] += mv;
  });
  c.sparsify_if_worth();
  return c;
}

// Convolution on the circle R/Z: indices add mod base^level.
template <class T>
MassVector<T> convolve_cyclic(const MassVector<T>& a, const MassVector<T>& b) {
  detail::check_conv_compat(a, b);
  if (!a.cyclic || !b.cyclic) fail(Errc::span_mismatch, "cyclic convolve needs cyclic operands");
  const std::int64_t N = a.length;
  MassVector<T> c;
  c.base = a.base;
  c.level = a.level;
  c.smear = std::min<std::int64_t>(static_cast<std::int64_t>(a.smear) + b.smear + 1, N);
  c.offset_idx = 0;
  c.cyclic = true;
  c.length = N;
  const double ta = to_double(a.total()), tb = to_double(b.total());
  c.err_bound = a.err_bound * tb + b.err_bound * ta;
  std::vector<T> out(static_cast<std::size_t>(N), scalar_from_int<T>(0));
  const double nnz_product = static_cast<double>(a.nnz()) * static_cast<double>(b.nnz());
  if constexpr (std::is_same_v<T, double>) {
    const double fft_cost = 40.0 * static_cast<double>(N) * std::log2(static_cast<double>(N) + 2);
    if (nnz_product <= std::max(4 * fft_cost, 1e7)) {
      detail::CellIter<T>::each(a, [&](std::int64_t i, const T& av) {
        detail::CellIter<T>::each(b, [&](std::int64_t j, const T& bv) {
          out[static_cast<std::size_t>((i + j) % N)] += av * bv;
        });
      });
    } else {
      MassVector<T> ad = a, bd = b;
      ad.to_dense();
      bd.to_dense();
      // cyclic convolution via zero-padded linear transform folded mod N
      std::vector<double> lin(static_cast<std::size_t>(2 * N - 1), 0.0);
      c.err_bound += detail::fft_accumulate(ad.dense, bd.dense, lin, ta * tb);
      for (std::size_t k = 0; k < lin.size(); ++k)
        out[k % static_cast<std::size_t>(N)] += lin[k];
    }
  } else {
    detail::CellIter<T>::each(a, [&](std::int64_t i, const T& av) {
      detail::CellIter<T>::each(b, [&](std::int64_t j, const T& bv) {
        out[static_cast<std::size_t>((i + j) % N)] += av * bv;
      });
    });
  }
  c.dense = std::move(out);
  c.sparsify_if_worth();
  return c;
}

// k-fold convolution power; smear telescopes to k*(smear(a)+1) - 1 on the
// line and saturates at the circle length for cyclic operands.
template <class T>
MassVector<T> convolve_power(const MassVector<T>& a, int k) {
  if (k < 1) fail(Errc::domain_error, "power must be >= 1");
  MassVector<T> acc = a;
  for (int i = 1; i < k; ++i) acc = a.cyclic ? convolve_cyclic(acc, a) : convolve(acc, a);
  return acc;
}

}  // namespace dimlab
