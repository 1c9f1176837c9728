#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <limits>
#include <string>

namespace foglet {

using Millis = std::chrono::milliseconds;

// Bandwidth held as integer kbit/s so that rate * time (ms) is an exact bit
// count. Unbounded() stands for "no link on the path" (co-located peers).
class Bandwidth {
 public:
  constexpr Bandwidth() = default;

  static constexpr Bandwidth kbps(std::int64_t v) { return Bandwidth(v); }
  static Bandwidth mbps(double v);
  static constexpr Bandwidth unbounded() {
    return Bandwidth(std::numeric_limits<std::int64_t>::max());
  }

  constexpr std::int64_t kbps() const { return kbps_; }
  double mbps() const;
  constexpr bool is_unbounded() const {
    return kbps_ == std::numeric_limits<std::int64_t>::max();
  }

  // Bits moved in `dt` at this rate.
  constexpr std::int64_t bits_over(Millis dt) const { return kbps_ * dt.count(); }

  constexpr Bandwidth operator+(Bandwidth o) const { return Bandwidth(kbps_ + o.kbps_); }
  constexpr Bandwidth operator-(Bandwidth o) const { return Bandwidth(kbps_ - o.kbps_); }
  constexpr Bandwidth& operator+=(Bandwidth o) { kbps_ += o.kbps_; return *this; }
  constexpr Bandwidth& operator-=(Bandwidth o) { kbps_ -= o.kbps_; return *this; }
  constexpr auto operator<=>(const Bandwidth&) const = default;

  std::string to_string() const;

 private:
  constexpr explicit Bandwidth(std::int64_t kbps) : kbps_(kbps) {}
  std::int64_t kbps_ = 0;
};

// vCPUs are kept in millicores; RAM in MiB; disk in GiB.
struct ResourceVector {
  std::int64_t millicores = 0;
  std::int64_t ram_mib = 0;
  std::int64_t disk_gib = 0;

  static ResourceVector of(double vcpus, std::int64_t ram_mib, std::int64_t disk_gib);

  double vcpus() const { return static_cast<double>(millicores) / 1000.0; }

  ResourceVector operator+(const ResourceVector& o) const {
    return {millicores + o.millicores, ram_mib + o.ram_mib, disk_gib + o.disk_gib};
  }
  ResourceVector operator-(const ResourceVector& o) const {
    return {millicores - o.millicores, ram_mib - o.ram_mib, disk_gib - o.disk_gib};
  }
  ResourceVector& operator+=(const ResourceVector& o) { return *this = *this + o; }
  ResourceVector& operator-=(const ResourceVector& o) { return *this = *this - o; }
  bool operator==(const ResourceVector&) const = default;

  // Componentwise partial order.
  bool fits_within(const ResourceVector& o) const {
    return millicores <= o.millicores && ram_mib <= o.ram_mib && disk_gib <= o.disk_gib;
  }
  bool is_non_negative() const { return millicores >= 0 && ram_mib >= 0 && disk_gib >= 0; }
  bool is_zero() const { return millicores == 0 && ram_mib == 0 && disk_gib == 0; }

  std::string to_string() const;
};

constexpr std::int64_t kBitsPerMiB = 8LL * 1024 * 1024;

}  // namespace foglet
