#pragma once

#include <cmath>
#include <compare>
#include <cstdint>

namespace iaqm::sim {

/// Simulated time (or duration) as integer nanoseconds.
class SimTime {
 public:
  constexpr SimTime() = default;

  static constexpr SimTime FromNanos(int64_t ns) { return SimTime(ns); }
  static constexpr SimTime FromMicros(int64_t us) { return SimTime(us * 1'000); }
  static constexpr SimTime FromMillis(int64_t ms) { return SimTime(ms * 1'000'000); }
  static constexpr SimTime FromSeconds(int64_t s) { return SimTime(s * 1'000'000'000); }
  // Rounds half away from zero.
  static SimTime FromSecondsF(double s) { return SimTime(std::llround(s * 1e9)); }

  static constexpr SimTime Max() { return SimTime(INT64_MAX); }

  constexpr int64_t nanos() const { return ns_; }
  constexpr double seconds() const { return static_cast<double>(ns_) * 1e-9; }
  constexpr double micros() const { return static_cast<double>(ns_) * 1e-3; }
  constexpr double millis() const { return static_cast<double>(ns_) * 1e-6; }

  constexpr SimTime operator+(SimTime o) const { return SimTime(ns_ + o.ns_); }
  constexpr SimTime operator-(SimTime o) const { return SimTime(ns_ - o.ns_); }
  constexpr SimTime& operator+=(SimTime o) {
    ns_ += o.ns_;
    return *this;
  }
  constexpr SimTime& operator-=(SimTime o) {
    ns_ -= o.ns_;
    return *this;
  }
  constexpr SimTime operator*(int64_t k) const { return SimTime(ns_ * k); }
  constexpr SimTime operator/(int64_t k) const { return SimTime(ns_ / k); }

  constexpr auto operator<=>(const SimTime&) const = default;

 private:
  constexpr explicit SimTime(int64_t ns) : ns_(ns) {}
  int64_t ns_ = 0;
};

}  // namespace iaqm::sim
