#pragma once

#include <cstdint>
#include <limits>

namespace qdyne {

// Counter-based pseudorandom stream (SplitMix64 over a keyed counter).
// Streams are identified by (seed, stream, substream); draws within a
// stream are indexed by an internal counter, so serial and parallel
// execution with the same ids produce identical sequences.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0)
      : key_(mix(mix(mix(0x9e3779b97f4a7c15ull ^ seed) + stream) + substream)),
        counter_(0) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return mix(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

/// One standard-normal draw (Box-Muller, two uniforms consumed per call).
/// Stateless given the stream position, so draw counts stay predictable.
double standard_normal(RngStream& rng);

/// Poisson draw with mean mu >= 0 (Knuth multiplication for small mu;
/// large means are split in halves, exact because Poisson sums are
/// Poisson).
long poisson_draw(double mu, RngStream& rng);

// Stream ids for the components that consume randomness. Keeping them in
// one place guarantees that independent consumers never collide.
namespace stream_id {
inline constexpr std::uint64_t kOuInit = 1;
inline constexpr std::uint64_t kOuPath = 2;
inline constexpr std::uint64_t kReadout = 3;
inline constexpr std::uint64_t kFieldPhase = 4;
inline constexpr std::uint64_t kEnsemble = 5;
}  // namespace stream_id

}  // namespace qdyne
