#include "abrsim/units.hpp"

#include "abrsim/errors.hpp"

#include <charconv>
#include <stdexcept>

namespace abrsim {

namespace {

std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

Rate Rate::from_mbps(boost::rational<std::int64_t> mbps) {
  return Rate(mbps * boost::rational<std::int64_t>(1'000'000, kCellBits));
}

double Rate::mbps() const { return cells_per_second() * kCellBits / 1e6; }

BigRational Rate::exact() const {
  return BigRational(value_.numerator()) / BigRational(value_.denominator());
}

Micros Rate::interval() const {
  if (value_ <= 0) throw std::domain_error("interval of a non-positive rate");
  return Micros(kTicksPerSecond) / value_;
}

boost::rational<std::int64_t> parse_rational(std::string_view text) {
  text = trim(text);
  if (text.empty()) throw std::invalid_argument("empty number");
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto num = parse_int(trim(text.substr(0, slash)));
    auto den = parse_int(trim(text.substr(slash + 1)));
    if (den == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
    return {num, den};
  }
  bool negative = false;
  std::string_view body = text;
  if (body.front() == '-' || body.front() == '+') {
    negative = body.front() == '-';
    body.remove_prefix(1);
  }
  std::int64_t den = 1;
  std::int64_t num = 0;
  if (auto dot = body.find('.'); dot != std::string_view::npos) {
    auto whole = body.substr(0, dot);
    auto frac = body.substr(dot + 1);
    if (frac.size() > 12) throw std::invalid_argument("too many decimals in '" + std::string(text) + "'");
    num = whole.empty() ? 0 : parse_int(whole);
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    num = num * den + (frac.empty() ? 0 : parse_int(frac));
  } else {
    num = parse_int(body);
  }
  return {negative ? -num : num, den};
}

std::string format_rational(const boost::rational<std::int64_t>& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

SimTime ceil_ticks(const Micros& t) {
  if (t <= 0) return 0;
  auto q = t.numerator() / t.denominator();
  if (q * t.denominator() != t.numerator()) ++q;
  return static_cast<SimTime>(q);
}

SimTime floor_ticks(const Micros& t) {
  if (t <= 0) return 0;
  return static_cast<SimTime>(t.numerator() / t.denominator());
}

double to_double(const BigRational& r) { return r.convert_to<double>(); }

ConfigError::ConfigError(std::vector<FieldDiagnostic> diagnostics)
    : Error(summarize(diagnostics)), diagnostics_(std::move(diagnostics)) {}

ConfigError::ConfigError(std::string field, std::string message)
    : ConfigError(std::vector<FieldDiagnostic>{{std::move(field), std::move(message)}}) {}

std::string ConfigError::summarize(const std::vector<FieldDiagnostic>& d) {
  std::string out = "invalid configuration";
  for (const auto& item : d) out += "\n  " + item.field + ": " + item.message;
  return out;
}

}  // namespace abrsim
