#include "pemlab/random.h"

namespace pemlab {

StreamRng::StreamRng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

std::uint64_t stream_id(StreamPurpose purpose, std::uint64_t index) {
  return (static_cast<std::uint64_t>(purpose) << 48) ^ index;
}

std::vector<double> stratified_parameters(double lo, double hi, std::size_t count,
                                          std::uint64_t seed) {
  std::vector<double> out(count);
  const double width = (hi - lo) / static_cast<double>(count);
  for (std::size_t i = 0; i < count; ++i) {
    StreamRng rng(seed, stream_id(StreamPurpose::parameter_jitter, i));
    out[i] = lo + (static_cast<double>(i) + rng.uniform01()) * width;
  }
  return out;
}

}  // namespace pemlab
