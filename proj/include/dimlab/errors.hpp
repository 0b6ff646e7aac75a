#pragma once

#include <stdexcept>
#include <string>

namespace dimlab {

enum class Errc {
  bad_base,
  duplicate_digit,
  digit_out_of_range,
  prob_sum,
  nonpositive_prob,
  empty_atom_list,
  duplicate_position,
  nonpositive_atom_mass,
  level_too_large,
  atom_off_lattice,
  nonpositive_radius,
  base_mismatch,
  level_mismatch,
  span_mismatch,
  point_outside_hull,
  all_brackets_zero,
  ambiguous_endpoint_branch,
  gap_too_small,
  gap_not_found,
  decomposition_mismatch,
  decomposition_not_unique,
  degenerate_weights,
  domain_error,
  hypothesis_not_met,
  no_interior_found,
  config_error,
  io_error,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::bad_base: return "BadBase";
    case Errc::duplicate_digit: return "DuplicateDigit";
    case Errc::digit_out_of_range: return "DigitOutOfRange";
    case Errc::prob_sum: return "ProbSumError";
    case Errc::nonpositive_prob: return "NonpositiveProb";
    case Errc::empty_atom_list: return "EmptyAtomList";
    case Errc::duplicate_position: return "DuplicatePosition";
    case Errc::nonpositive_atom_mass: return "NonpositiveAtomMass";
    case Errc::level_too_large: return "LevelTooLarge";
    case Errc::atom_off_lattice: return "AtomOffLattice";
    case Errc::nonpositive_radius: return "NonpositiveRadius";
    case Errc::base_mismatch: return "BaseMismatch";
    case Errc::level_mismatch: return "LevelMismatch";
    case Errc::span_mismatch: return "SpanMismatch";
    case Errc::point_outside_hull: return "PointOutsideHull";
    case Errc::all_brackets_zero: return "AllBracketsZero";
    case Errc::ambiguous_endpoint_branch: return "AmbiguousEndpointBranch";
    case Errc::gap_too_small: return "GapTooSmall";
    case Errc::gap_not_found: return "GapNotFound";
    case Errc::decomposition_mismatch: return "DecompositionMismatch";
    case Errc::decomposition_not_unique: return "DecompositionNotUnique";
    case Errc::degenerate_weights: return "DegenerateWeights";
    case Errc::domain_error: return "DomainError";
    case Errc::hypothesis_not_met: return "HypothesisNotMet";
    case Errc::no_interior_found: return "NoInteriorFound";
    case Errc::config_error: return "ConfigError";
    case Errc::io_error: return "IoError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace dimlab
