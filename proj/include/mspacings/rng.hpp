#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace mspacings {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// A reproducible random stream identified by (master seed, stream id).
//
// The engine is mt19937_64, whose output sequence is fixed by the standard.
// The real-valued transforms below are written out by hand because the
// std:: distributions are implementation defined, and reports must be
// bit-identical across platforms.
class RngStream {
public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : master_seed_(master_seed), stream_id_(stream_id),
        engine_(splitmix64(master_seed ^ splitmix64(stream_id))) {}

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1), 53 bits of resolution.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Unit-mean exponential by inverse transform; strictly positive.
  double exponential() { return -std::log1p(-uniform()); }

  // Standard normal by Box-Muller, consuming uniforms in pairs.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stream ids are namespaced so that independent parts of one experiment never
// share a stream: tag in the top 16 bits, rung index in the next 16, then the
// replication index.
inline std::uint64_t stream_id(std::uint64_t tag, std::uint64_t rung,
                               std::uint64_t replication) {
  return (tag << 48) | ((rung & 0xffffULL) << 32) |
         (replication & 0xffffffffULL);
}

} // namespace mspacings
