#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace fiberpool {

// All protocol failures that are not verdicts surface as this exception.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Currency and work are exact rationals so that budget-balance identities
// hold with zero tolerance.
using Rational = boost::multiprecision::cpp_rational;
using Amount = Rational;
using Work = Rational;

inline Rational make_rational(std::int64_t num, std::int64_t den = 1) {
  if (den == 0) throw Error("rational with zero denominator");
  return Rational(num, den);
}

// Parses "3", "-2", "0.125", "7/8". Decimal literals are converted exactly,
// so "0.1" is 1/10 and not the nearest double.
inline Rational parse_rational(std::string_view text) {
  auto fail = [&] { return Error("not a rational number: '" + std::string(text) + "'"); };
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) throw fail();

  bool negative = false;
  if (text.front() == '-' || text.front() == '+') {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  auto parse_digits = [&](std::string_view digits) {
    if (digits.empty()) throw fail();
    boost::multiprecision::cpp_int value = 0;
    for (char c : digits) {
      if (c < '0' || c > '9') throw fail();
      value = value * 10 + (c - '0');
    }
    return value;
  };

  Rational out;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto num = parse_digits(text.substr(0, slash));
    auto den = parse_digits(text.substr(slash + 1));
    if (den == 0) throw fail();
    out = Rational(num, den);
  } else if (auto dot = text.find('.'); dot != std::string_view::npos) {
    auto whole = text.substr(0, dot);
    auto frac = text.substr(dot + 1);
    if (whole.empty() && frac.empty()) throw fail();
    boost::multiprecision::cpp_int scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    auto w = whole.empty() ? boost::multiprecision::cpp_int(0) : parse_digits(whole);
    auto f = frac.empty() ? boost::multiprecision::cpp_int(0) : parse_digits(frac);
    out = Rational(w * scale + f, scale);
  } else {
    out = Rational(parse_digits(text));
  }
  return negative ? Rational(-out) : out;
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

// Exact text form: "n" for integers, "n/d" otherwise.
inline std::string to_exact_string(const Rational& r) {
  auto num = boost::multiprecision::numerator(r);
  auto den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

// Fixed-point decimal rendering with `digits` fractional digits, rounded
// half away from zero. Computed exactly, so output is platform independent.
inline std::string to_decimal_string(const Rational& r, unsigned digits = 12) {
  using boost::multiprecision::cpp_int;
  cpp_int scale = 1;
  for (unsigned i = 0; i < digits; ++i) scale *= 10;
  cpp_int num = boost::multiprecision::numerator(r);
  cpp_int den = boost::multiprecision::denominator(r);
  bool negative = num < 0;
  if (negative) num = -num;
  cpp_int scaled = (num * scale * 2 + den) / (den * 2);
  cpp_int whole = scaled / scale;
  cpp_int frac = scaled % scale;
  std::string frac_str = frac.str();
  frac_str.insert(0, digits - frac_str.size(), '0');
  std::string out = (negative && scaled != 0 ? "-" : "") + whole.str();
  if (digits > 0) out += "." + frac_str;
  return out;
}

}  // namespace fiberpool
