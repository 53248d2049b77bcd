#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <cctype>
#include <cmath>
#include <string>

#include "causalmix/errors.hpp"

namespace causalmix {

// Exact backend for the oracle-mode algorithms. Uniqueness statements are
// exact, so they are tested with exact arithmetic; the sampled path runs on
// plain doubles.
using Rational = boost::multiprecision::mpq_rational;

template <typename T>
inline constexpr bool kExactScalar = false;
template <>
inline constexpr bool kExactScalar<Rational> = true;

inline double to_double(double x) { return x; }
inline double to_double(const Rational& x) { return x.template convert_to<double>(); }

template <typename T>
T from_double(double x) {
    return T(x); // exact for Rational: doubles are dyadic rationals
}

inline double scalar_abs(double x) { return std::fabs(x); }
inline Rational scalar_abs(const Rational& x) { return x < 0 ? Rational(-x) : x; }

// Parses "3/4", "0.25" or "1" into an exact rational. Decimal strings are
// read digit-by-digit so that e.g. "0.1" becomes 1/10, not the nearest double.
inline Rational parse_rational(const std::string& text) {
    const auto bad = [&]() -> Rational {
        raise(ErrorCode::InvalidArgument, "cannot parse rational from '" + text + "'");
    };
    std::size_t pos = 0;
    bool negative = false;
    if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
        negative = text[pos] == '-';
        ++pos;
    }
    if (pos >= text.size()) return bad();

    if (text.find('/') != std::string::npos) {
        const auto slash = text.find('/');
        try {
            boost::multiprecision::mpz_int num(text.substr(0, slash));
            boost::multiprecision::mpz_int den(text.substr(slash + 1));
            if (den == 0) return bad();
            return Rational(num, den);
        } catch (const std::exception&) {
            return bad();
        }
    }

    boost::multiprecision::mpz_int numerator = 0;
    boost::multiprecision::mpz_int denominator = 1;
    bool seen_digit = false;
    bool seen_dot = false;
    for (; pos < text.size(); ++pos) {
        const char ch = text[pos];
        if (ch == '.') {
            if (seen_dot) return bad();
            seen_dot = true;
        } else if (std::isdigit(static_cast<unsigned char>(ch))) {
            numerator = numerator * 10 + (ch - '0');
            if (seen_dot) denominator *= 10;
            seen_digit = true;
        } else {
            return bad();
        }
    }
    if (!seen_digit) return bad();
    Rational value(numerator, denominator);
    return negative ? Rational(-value) : value;
}

inline std::string to_exact_string(const Rational& x) { return x.str(); }

} // namespace causalmix
