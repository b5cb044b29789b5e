#pragma once

#include <cstdint>

// Counter-based random number streams. Every draw is a pure function of
// (root seed, path index, stream id, counter), so batch simulations are
// reproducible independently of thread scheduling: path i consumes the same
// numbers whether it runs first, last, or concurrently with path j.

namespace maxmart {

// Stream ids keep the different consumers of randomness on one path from
// colliding (increments vs. bridge-crossing uniforms vs. auxiliary draws).
namespace rng_stream {
inline constexpr std::uint64_t increments = 0;
inline constexpr std::uint64_t bridge_upper = 1;
inline constexpr std::uint64_t bridge_lower = 2;
inline constexpr std::uint64_t subordinator = 3;
inline constexpr std::uint64_t aux = 4;
}  // namespace rng_stream

// SplitMix64 finalizer; the core mixing primitive.
std::uint64_t mix64(std::uint64_t z) noexcept;

// Standard normal quantile (Wichura's AS 241, double precision).
// Requires p in (0, 1).
double normal_quantile(double p);

// Standard normal CDF via erfc.
double normal_cdf(double x) noexcept;

// CDF of |Z| for Z standard normal; 0 for x < 0.
double half_normal_cdf(double x) noexcept;

class CounterRng {
 public:
  CounterRng(std::uint64_t root_seed, std::uint64_t path_index,
             std::uint64_t stream_id) noexcept;

  // Stateless access: the i-th variate of this stream.
  double uniform_at(std::uint64_t counter) const noexcept;  // in (0, 1)
  double normal_at(std::uint64_t counter) const;

  // Sequential convenience interface.
  double next_uniform() noexcept { return uniform_at(counter_++); }
  double next_normal() { return normal_at(counter_++); }
  std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Derives a child seed from a root seed and a label (e.g. per-test seeds).
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t label) noexcept;

}  // namespace maxmart
