#pragma once

#include <cstdint>
#include <string>

#include <gmpxx.h>

#include "errors.hpp"

namespace dimlab {

// Exact rational scalar used by the "rational" computation mode.  The double
// mode uses IEEE doubles throughout; both share the same templated kernels.
using Rat = mpq_class;

inline double to_double(double x) { return x; }
inline double to_double(const Rat& x) { return x.get_d(); }

inline bool is_zero(double x) { return x == 0.0; }
inline bool is_zero(const Rat& x) { return sgn(x) == 0; }

template <class T>
T scalar_from_int(std::int64_t n) {
  if constexpr (std::is_same_v<T, double>) {
    return static_cast<double>(n);
  } else {
    Rat r;
    r = static_cast<long>(n);
    return r;
  }
}

// Exact conversion: every finite double is a dyadic rational.
inline Rat rat_from_double(double x) { return Rat(x); }

// Parses "p/q", plain integers, decimals ("0.25") and scientific notation
// ("2.5e-3") exactly.
inline Rat parse_rational(const std::string& s) {
  std::string t;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) t += c;
  if (t.empty()) fail(Errc::config_error, "empty rational literal");
  try {
    long expo = 0;
    auto e = t.find_first_of("eE");
    if (e != std::string::npos && t.find('/') == std::string::npos) {
      expo = std::stol(t.substr(e + 1));
      t = t.substr(0, e);
    }
    Rat r;
    auto dot = t.find('.');
    if (dot != std::string::npos) {
      if (t.find('/') != std::string::npos || t.find('.', dot + 1) != std::string::npos)
        fail(Errc::config_error, "malformed rational literal '" + s + "'");
      std::string digits = t.substr(0, dot) + t.substr(dot + 1);
      std::size_t frac = t.size() - dot - 1;
      if (digits.empty() || digits == "-" || digits == "+")
        fail(Errc::config_error, "malformed rational literal '" + s + "'");
      mpz_class num(digits, 10);
      mpz_class den = 1;
      for (std::size_t i = 0; i < frac; ++i) den *= 10;
      r = Rat(num, den);
    } else {
      r = Rat(t, 10);
    }
    r.canonicalize();
    if (expo != 0) {
      mpz_class p10 = 1;
      for (long i = 0; i < std::abs(expo); ++i) p10 *= 10;
      if (expo > 0)
        r *= Rat(p10);
      else
        r /= Rat(p10);
    }
    return r;
  } catch (const std::invalid_argument&) {
    fail(Errc::config_error, "malformed rational literal '" + s + "'");
  } catch (const std::out_of_range&) {
    fail(Errc::config_error, "malformed rational literal '" + s + "'");
  }
}

inline std::string rational_str(const Rat& x) { return x.get_str(); }

}  // namespace dimlab
