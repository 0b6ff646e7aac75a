#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "cascade.hpp"
#include "convolve.hpp"
#include "errors.hpp"
#include "measures.hpp"
#include "rational.hpp"

namespace dimlab {

using Json = nlohmann::json;

// Measure expression tree: IFS and atomic leaves combined by convolution and
// convolution powers.
struct MeasureSpec {
  enum class Kind { ifs, atomic, convolve, power };
  Kind kind = Kind::ifs;
  IfsMeasure ifs;
  AtomicMeasure atoms;
  std::vector<MeasureSpec> children;
  int k = 1;
};

namespace detail {

inline Rat json_rational(const Json& j, const char* what) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) {
    Rat r;
    r = static_cast<long>(j.get<std::int64_t>());
    return r;
  }
  if (j.is_number_float()) return rat_from_double(j.get<double>());
  fail(Errc::config_error, std::string(what) + " must be a number or rational string");
}

}  // namespace detail

inline MeasureSpec parse_measure(const Json& j) {
  MeasureSpec spec;
  if (j.is_string()) {
    spec.kind = MeasureSpec::Kind::ifs;
    spec.ifs = parse_preset(j.get<std::string>());
    return spec;
  }
  if (!j.is_object() || !j.contains("kind"))
    fail(Errc::config_error, "measure config must be a preset string or an object with 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "preset") {
    spec.kind = MeasureSpec::Kind::ifs;
    spec.ifs = parse_preset(j.at("name").get<std::string>());
    return spec;
  }
  if (kind == "ifs") {
    spec.kind = MeasureSpec::Kind::ifs;
    if (!j.contains("base") || !j.contains("branches"))
      fail(Errc::config_error, "ifs config needs 'base' and 'branches'");
    int base = j.at("base").get<int>();
    std::vector<Branch> branches;
    for (const auto& b : j.at("branches")) {
      if (b.is_array() && b.size() == 2)
        branches.push_back({b.at(0).get<int>(), detail::json_rational(b.at(1), "branch prob")});
      else if (b.is_object())
        branches.push_back({b.at("digit").get<int>(),
                            detail::json_rational(b.at("prob"), "branch prob")});
      else
        fail(Errc::config_error, "branch entries are [digit, prob] pairs");
    }
    Rat scale = 1, shift = 0;
    if (j.contains("normalize")) {
      const auto& n = j.at("normalize");
      if (n.contains("scale")) scale = detail::json_rational(n.at("scale"), "scale");
      if (n.contains("shift")) shift = detail::json_rational(n.at("shift"), "shift");
    }
    spec.ifs = make_ifs(base, std::move(branches), std::move(scale), std::move(shift));
    return spec;
  }
  if (kind == "atomic") {
    spec.kind = MeasureSpec::Kind::atomic;
    if (!j.contains("atoms")) fail(Errc::config_error, "atomic config needs 'atoms'");
    std::vector<Atom> atoms;
    for (const auto& a : j.at("atoms")) {
      if (a.is_array() && a.size() == 2)
        atoms.push_back({detail::json_rational(a.at(0), "atom position"),
                         detail::json_rational(a.at(1), "atom mass")});
      else if (a.is_object())
        atoms.push_back({detail::json_rational(a.at("pos"), "atom position"),
                         detail::json_rational(a.at("mass"), "atom mass")});
      else
        fail(Errc::config_error, "atom entries are [position, mass] pairs");
    }
    spec.atoms = make_atomic(std::move(atoms));
    return spec;
  }
  if (kind == "convolve") {
    spec.kind = MeasureSpec::Kind::convolve;
    if (!j.contains("of") || !j.at("of").is_array() || j.at("of").size() < 2)
      fail(Errc::config_error, "convolve config needs an 'of' array of >= 2 operands");
    for (const auto& c : j.at("of")) spec.children.push_back(parse_measure(c));
    return spec;
  }
  if (kind == "power") {
    spec.kind = MeasureSpec::Kind::power;
    if (!j.contains("of") || !j.contains("k"))
      fail(Errc::config_error, "power config needs 'of' and 'k'");
    spec.k = j.at("k").get<int>();
    if (spec.k < 1) fail(Errc::config_error, "power k must be >= 1");
    spec.children.push_back(parse_measure(j.at("of")));
    return spec;
  }
  fail(Errc::config_error, "unknown measure kind '" + kind + "'");
}

inline MeasureSpec parse_measure_text(const std::string& text) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    // bare preset names are accepted without JSON quoting
    MeasureSpec spec;
    spec.kind = MeasureSpec::Kind::ifs;
    spec.ifs = parse_preset(text);
    return spec;
  }
  return parse_measure(j);
}

// Base shared by every IFS leaf (0 when the tree is atomic-only and any base
// works).
inline int spec_base(const MeasureSpec& spec) {
  switch (spec.kind) {
    case MeasureSpec::Kind::ifs:
      return spec.ifs.base;
    case MeasureSpec::Kind::atomic:
      return 0;
    default: {
      int base = 0;
      for (const auto& c : spec.children) {
        int cb = spec_base(c);
        if (cb == 0) continue;
        if (base == 0)
          base = cb;
        else if (base != cb)
          fail(Errc::base_mismatch, "operands use bases " + std::to_string(base) + " and " +
                                        std::to_string(cb));
      }
      return base;
    }
  }
  return 0;
}

inline std::string describe(const MeasureSpec& spec) {
  switch (spec.kind) {
    case MeasureSpec::Kind::ifs: {
      std::string s = "ifs(base " + std::to_string(spec.ifs.base) + "; ";
      for (std::size_t i = 0; i < spec.ifs.branches.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(spec.ifs.branches[i].digit) + ":" +
             rational_str(spec.ifs.branches[i].prob);
      }
      if (spec.ifs.scale != 1 || spec.ifs.shift != 0)
        s += "; x -> " + rational_str(spec.ifs.scale) + "*x + " + rational_str(spec.ifs.shift);
      return s + ")";
    }
    case MeasureSpec::Kind::atomic: {
      std::string s = "atoms(";
      for (std::size_t i = 0; i < spec.atoms.atoms.size(); ++i) {
        if (i) s += ", ";
        s += rational_str(spec.atoms.atoms[i].mass) + "@" + rational_str(spec.atoms.atoms[i].pos);
      }
      return s + ")";
    }
    case MeasureSpec::Kind::convolve: {
      std::string s = "convolve(";
      for (std::size_t i = 0; i < spec.children.size(); ++i) {
        if (i) s += ", ";
        s += describe(spec.children[i]);
      }
      return s + ")";
    }
    case MeasureSpec::Kind::power:
      return "power(" + describe(spec.children[0]) + ", k=" + std::to_string(spec.k) + ")";
  }
  return "?";
}

// Level-n vector of the measure expression.  Atomic operands fold in through
// the exact translation path, so purely atomic factors never add smear.
template <class T>
MassVector<T> build_level(const MeasureSpec& spec, int base, int level,
                          std::int64_t cell_cap = kDefaultCellCap) {
  switch (spec.kind) {
    case MeasureSpec::Kind::ifs:
      if (spec.ifs.base != base)
        fail(Errc::base_mismatch, "measure base " + std::to_string(spec.ifs.base) +
                                      " differs from requested base " + std::to_string(base));
      return refine<T>(spec.ifs, level, cell_cap);
    case MeasureSpec::Kind::atomic:
      return refine_atomic<T>(spec.atoms, base, level, cell_cap);
    case MeasureSpec::Kind::convolve: {
      MassVector<T> acc;
      bool have = false;
      for (const auto& c : spec.children) {
        if (c.kind == MeasureSpec::Kind::atomic) continue;
        auto v = build_level<T>(c, base, level, cell_cap);
        acc = have ? convolve(acc, v) : std::move(v);
        have = true;
      }
      for (const auto& c : spec.children) {
        if (c.kind != MeasureSpec::Kind::atomic) continue;
        if (!have) {
          acc = refine_atomic<T>(c.atoms, base, level, cell_cap);
          have = true;
        } else {
          acc = convolve_atomic(acc, c.atoms);
        }
      }
      return acc;
    }
    case MeasureSpec::Kind::power: {
      const MeasureSpec& child = spec.children[0];
      if (child.kind == MeasureSpec::Kind::atomic) {
        auto acc = refine_atomic<T>(child.atoms, base, level, cell_cap);
        for (int i = 1; i < spec.k; ++i) acc = convolve_atomic(acc, child.atoms);
        return acc;
      }
      return convolve_power(build_level<T>(child, base, level, cell_cap), spec.k);
    }
  }
  fail(Errc::config_error, "unreachable measure kind");
}

// Same tree evaluated on the circle R/Z.
template <class T>
MassVector<T> build_cyclic(const MeasureSpec& spec, int base, int level,
                           std::int64_t cell_cap = kDefaultCellCap) {
  switch (spec.kind) {
    case MeasureSpec::Kind::ifs:
    case MeasureSpec::Kind::atomic:
      return to_cyclic(build_level<T>(spec, base, level, cell_cap));
    case MeasureSpec::Kind::convolve: {
      MassVector<T> acc;
      bool have = false;
      for (const auto& c : spec.children) {
        auto v = build_cyclic<T>(c, base, level, cell_cap);
        acc = have ? convolve_cyclic(acc, v) : std::move(v);
        have = true;
      }
      return acc;
    }
    case MeasureSpec::Kind::power:
      return convolve_power(build_cyclic<T>(spec.children[0], base, level, cell_cap), spec.k);
  }
  fail(Errc::config_error, "unreachable measure kind");
}

// Support audit at a finite level: exact for atomic leaves, smear-aware
// vector spans otherwise.
inline SupportSet audit_support(const MeasureSpec& spec, int base, int level) {
  if (spec.kind == MeasureSpec::Kind::atomic) return support(spec.atoms);
  if (spec.kind == MeasureSpec::Kind::ifs) return support(spec.ifs, level);
  return support_of_vector(build_level<double>(spec, base, level));
}

}  // namespace dimlab
