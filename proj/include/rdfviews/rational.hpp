#pragma once

#include <cmath>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "rdfviews/error.hpp"

namespace rdfviews {

/// Exact arithmetic for weights and cost estimates; estimates are products of
/// counts and reciprocal counts, so equalities between algebraic routes hold exactly.
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// Exact binary value of `x`; rejects NaN and infinities.
inline Rational rational_from_double(double x) {
  if (!std::isfinite(x)) throw Error(ErrorCode::invalid_config, "non-finite number");
  return Rational(x);
}

inline std::string to_string(const Rational& r) { return r.str(); }

}  // namespace rdfviews
