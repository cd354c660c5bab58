#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

#include "blmchain/error.hpp"

namespace blmchain {

inline constexpr int max_sig_figs = 15;

namespace detail {

struct Decimal {
  bool negative = false;
  std::string digits;  // no leading or trailing zeros; empty for zero
  int exponent = 0;    // value = d1.d2d3… × 10^exponent
};

// Splits a to_chars scientific rendering "-d.ddde-XX" into parts.
inline Decimal split_scientific(std::string_view s) {
  Decimal d;
  if (!s.empty() && s.front() == '-') {
    d.negative = true;
    s.remove_prefix(1);
  }
  const auto e = s.find('e');
  for (char c : s.substr(0, e)) {
    if (c != '.') d.digits.push_back(c);
  }
  std::string_view exp = s.substr(e + 1);
  if (!exp.empty() && exp.front() == '+') exp.remove_prefix(1);
  std::from_chars(exp.data(), exp.data() + exp.size(), d.exponent);
  while (!d.digits.empty() && d.digits.back() == '0') d.digits.pop_back();
  if (d.digits.empty()) {
    d.negative = false;
    d.exponent = 0;
  }
  return d;
}

inline std::string render_scientific(double x, int precision) {
  std::string buf(precision + 32, '\0');
  auto r = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::scientific, precision);
  buf.resize(static_cast<std::size_t>(r.ptr - buf.data()));
  return buf;
}

inline Decimal shortest(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific);
  return split_scientific(std::string_view(buf, static_cast<std::size_t>(r.ptr - buf)));
}

inline double to_double(const Decimal& d) {
  if (d.digits.empty()) return 0.0;
  std::string s = d.negative ? "-" : "";
  s += d.digits;
  s += 'e';
  s += std::to_string(d.exponent - static_cast<int>(d.digits.size()) + 1);
  double v = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

// Adds one unit in the last place of a digit string; may grow it by one digit.
inline void increment(Decimal& d) {
  int i = static_cast<int>(d.digits.size()) - 1;
  while (i >= 0 && d.digits[i] == '9') d.digits[i--] = '0';
  if (i >= 0) {
    ++d.digits[i];
  } else {
    d.digits.insert(d.digits.begin(), '1');
    ++d.exponent;
  }
}

}  // namespace detail

enum class RoundMode { half_away, toward_neg_inf, toward_pos_inf };

/// x rounded to `sig` significant figures.
inline double sig_fig_round(double x, int sig, RoundMode mode = RoundMode::half_away) {
  if (sig < 1) throw Error(ErrorCode::config_error, "significant figures must be >= 1");
  if (x == 0.0 || !std::isfinite(x)) return x;
  // Works on a 41-digit rendering, far past where double precision runs out.
  detail::Decimal d = detail::split_scientific(detail::render_scientific(x, 40));
  if (static_cast<int>(d.digits.size()) <= sig) return x;
  const std::string tail = d.digits.substr(static_cast<std::size_t>(sig));
  d.digits.resize(static_cast<std::size_t>(sig));
  bool up = false;
  switch (mode) {
    case RoundMode::half_away: up = tail.front() >= '5'; break;
    case RoundMode::toward_neg_inf: up = d.negative; break;
    case RoundMode::toward_pos_inf: up = !d.negative; break;
  }
  if (up) detail::increment(d);
  while (!d.digits.empty() && d.digits.back() == '0') d.digits.pop_back();
  return detail::to_double(d);
}

/// Canonical decimal text of a double: shortest round-trip digits, plain
/// notation unless the exponent is >= 4, <= -4, or not below the digit count
/// (so 3215.43 stays plain and 3200 at two figures reads 3.2e3). Lowercase
/// `e`, no `+`, no trailing zeros.
inline std::string format_canonical(double x) {
  if (!std::isfinite(x)) throw Error(ErrorCode::encoding_error, "non-finite coordinate");
  const detail::Decimal d = detail::shortest(x);
  if (d.digits.empty()) return "0";
  const int n = static_cast<int>(d.digits.size());
  const int e = d.exponent;
  std::string out = d.negative ? "-" : "";
  if (e >= 4 || e <= -4 || e >= n) {
    out += d.digits.front();
    if (n > 1) {
      out += '.';
      out += d.digits.substr(1);
    }
    out += 'e';
    out += std::to_string(e);
  } else if (e >= 0) {
    out += d.digits.substr(0, static_cast<std::size_t>(e) + 1);
    if (e + 1 < n) {
      out += '.';
      out += d.digits.substr(static_cast<std::size_t>(e) + 1);
    }
  } else {
    out += "0.";
    out.append(static_cast<std::size_t>(-e - 1), '0');
    out += d.digits;
  }
  return out;
}

/// Canonical text of x rounded to `sig` significant figures.
inline std::string sig_fig_string(double x, int sig) { return format_canonical(sig_fig_round(x, sig)); }

/// Strict inverse of format_canonical: rejects any other spelling.
inline std::optional<double> parse_canonical(std::string_view s) {
  if (s.empty() || s.size() > 64) return std::nullopt;
  for (char c : s) {
    const bool ok = (c >= '0' && c <= '9') || c == '-' || c == '.' || c == 'e';
    if (!ok) return std::nullopt;
  }
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  if (format_canonical(v) != s) return std::nullopt;
  return v;
}

}  // namespace blmchain
