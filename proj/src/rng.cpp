#include "tmpc/rng.hpp"

#include <cmath>

namespace tmpc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// FNV-1a over the channel name, folded into the seed.
std::uint64_t channel_key(std::uint64_t seed, std::string_view channel) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : channel) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 0x100000001B3ULL;
  }
  return splitmix64(seed ^ splitmix64(h));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::string_view channel)
    : key_(channel_key(seed, channel)) {}

std::uint64_t RngStream::next_u64() { return splitmix64(key_ + counter_++); }

double RngStream::uniform() {
  const std::uint64_t bits = next_u64() >> 11;  // 53 bits
  const double u = static_cast<double>(bits) * 0x1.0p-53;
  return u > 0.0 ? u : 0x1.0p-53;
}

double RngStream::gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

Eigen::Vector3d RngStream::gaussian_vec3(double mean, double stddev) {
  return {gaussian(mean, stddev), gaussian(mean, stddev), gaussian(mean, stddev)};
}

}  // namespace tmpc
