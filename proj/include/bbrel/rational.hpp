#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace bbrel {

/// Exact ratio type for uptime/downtime/failure arithmetic.
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline Rational ratio(std::int64_t num, std::int64_t den) { return Rational(num, den); }

}  // namespace bbrel
