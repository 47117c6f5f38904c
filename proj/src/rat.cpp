#include "qrhint/rat.hpp"

#include <stdexcept>

namespace qrhint {

std::string rat_to_string(const Rat& r) {
  if (r.denominator() == 1) return r.numerator().str();
  // Prefer a finite decimal expansion when the denominator is 2^a * 5^b.
  BigInt d = r.denominator();
  BigInt scale = 1;
  while (d % 2 == 0) { d /= 2; scale *= 10; }
  while (d % 5 == 0) { d /= 5; scale *= 10; }
  if (d == 1) {
    // r = n/den with den | scale; emit sign, integer part, fraction digits.
    BigInt num = r.numerator() < 0 ? BigInt(-r.numerator()) : r.numerator();
    BigInt den = r.denominator();
    BigInt scaled = num * (scale / den);
    std::string digits = scaled.str();
    std::string sdigits = scale.str();
    size_t frac_len = sdigits.size() - 1;
    while (digits.size() <= frac_len) digits.insert(digits.begin(), '0');
    std::string out = digits.substr(0, digits.size() - frac_len) + "." +
                      digits.substr(digits.size() - frac_len);
    while (out.back() == '0') out.pop_back();
    if (out.back() == '.') out.pop_back();
    return (r.numerator() < 0 ? "-" : "") + out;
  }
  return r.numerator().str() + "/" + r.denominator().str();
}

Rat rat_from_decimal_string(const std::string& s) {
  bool neg = false;
  size_t i = 0;
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) { neg = s[i] == '-'; i++; }
  BigInt num = 0;
  BigInt den = 1;
  bool seen_digit = false, seen_dot = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (c == '.') {
      if (seen_dot) throw std::invalid_argument("bad decimal literal: " + s);
      seen_dot = true;
    } else if (c >= '0' && c <= '9') {
      num = num * 10 + (c - '0');
      if (seen_dot) den *= 10;
      seen_digit = true;
    } else {
      throw std::invalid_argument("bad decimal literal: " + s);
    }
  }
  if (!seen_digit) throw std::invalid_argument("bad decimal literal: " + s);
  Rat r(num, den);
  return neg ? -r : r;
}

}  // namespace qrhint
