#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace abrsim {

/// Simulated clock value. One tick is one microsecond.
using SimTime = std::uint64_t;

/// Exact durations and instants in microseconds. Used wherever integer ticks
/// would round away information (GCRA state, link serialization).
using Micros = boost::rational<std::int64_t>;

/// Arbitrary-precision rational, used by the off-line oracles.
using BigRational = boost::multiprecision::cpp_rational;

inline constexpr std::int64_t kTicksPerSecond = 1'000'000;

/// 53-byte cells: 48 bytes of payload plus a 5 byte header.
inline constexpr std::int64_t kCellBits = 53 * 8;

/// Cells per second, held as an exact fraction.
class Rate {
 public:
  Rate() = default;
  explicit Rate(std::int64_t cells_per_second) : value_(cells_per_second) {}
  Rate(std::int64_t num, std::int64_t den) : value_(num, den) {}
  explicit Rate(boost::rational<std::int64_t> value) : value_(value) {}

  /// Link bandwidth in Mbps converted to a cell rate with 424-bit cells.
  static Rate from_mbps(boost::rational<std::int64_t> mbps);

  const boost::rational<std::int64_t>& value() const { return value_; }
  double cells_per_second() const { return boost::rational_cast<double>(value_); }
  double mbps() const;
  BigRational exact() const;

  /// Nominal spacing between cells at this rate.
  Micros interval() const;

  bool positive() const { return value_ > 0; }

  friend bool operator==(const Rate& a, const Rate& b) { return a.value_ == b.value_; }
  friend bool operator<(const Rate& a, const Rate& b) { return a.value_ < b.value_; }
  friend bool operator<=(const Rate& a, const Rate& b) { return a.value_ <= b.value_; }
  friend bool operator>(const Rate& a, const Rate& b) { return a.value_ > b.value_; }

 private:
  boost::rational<std::int64_t> value_{0};
};

/// Parses "12.5", "3/7" or "-2" into an exact fraction. Throws
/// std::invalid_argument on malformed input.
boost::rational<std::int64_t> parse_rational(std::string_view text);

/// Formats as "n" or "n/d".
std::string format_rational(const boost::rational<std::int64_t>& r);

/// Smallest integer tick not earlier than the exact instant.
SimTime ceil_ticks(const Micros& t);
/// Largest integer tick not later than the exact instant.
SimTime floor_ticks(const Micros& t);

double to_double(const BigRational& r);

}  // namespace abrsim
