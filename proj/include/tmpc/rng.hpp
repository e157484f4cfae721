#ifndef TMPC_RNG_HPP
#define TMPC_RNG_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string_view>

namespace tmpc {

/// Counter-based generator: output_i = splitmix64(key + i). The key is a
/// hash of (seed, channel name), so every noise channel of a scenario is an
/// independent stream that replays bit-identically on any platform.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view channel);

  std::uint64_t next_u64();

  /// Uniform double in (0, 1), 53-bit resolution, never exactly 0.
  double uniform();

  /// Standard normal via Box-Muller (pair cached).
  double gaussian();
  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  Eigen::Vector3d gaussian_vec3(double mean, double stddev);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace tmpc

#endif  // TMPC_RNG_HPP
