#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

#include <cstdint>
#include <string>

namespace qrhint {

using BigInt = boost::multiprecision::cpp_int;
using Rat = boost::rational<BigInt>;

inline Rat rat(long long n, long long d = 1) { return Rat(BigInt(n), BigInt(d)); }

inline double to_double(const Rat& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

inline BigInt floor_rat(const Rat& r) {
  BigInt q = r.numerator() / r.denominator();
  if (r.numerator() < 0 && q * r.denominator() != r.numerator()) q -= 1;
  return q;
}

inline BigInt ceil_rat(const Rat& r) {
  BigInt q = r.numerator() / r.denominator();
  if (r.numerator() > 0 && q * r.denominator() != r.numerator()) q += 1;
  return q;
}

inline bool is_integer(const Rat& r) { return r.denominator() == 1; }

std::string rat_to_string(const Rat& r);

/// Parses decimal literals such as "12", "-3.5", "0.25".
Rat rat_from_decimal_string(const std::string& s);

}  // namespace qrhint
