#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace pemlab {

// Independent, reproducible random streams addressed by (seed, stream id).
// Each sample of an experiment owns its own stream, which is what makes
// results independent of the thread count.
class StreamRng {
 public:
  StreamRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

// Stream ids are namespaced per purpose so that, e.g., parameter jitter and
// binary-expansion tails never share a stream.
enum class StreamPurpose : std::uint64_t {
  parameter_jitter = 1,
  expansion_tail = 2,
  phase_start = 3,
  indicator_choice = 4,
  monte_carlo = 5,
};

std::uint64_t stream_id(StreamPurpose purpose, std::uint64_t index);

// One jittered sample per equal sub-interval of [lo, hi].
std::vector<double> stratified_parameters(double lo, double hi, std::size_t count,
                                          std::uint64_t seed);

}  // namespace pemlab
