#include "fsmc/rng.hpp"

#include <cmath>
#include <numbers>

namespace fsmc {

namespace {

std::uint64_t splitmix64(std::uint64_t& z) {
  z += 0x9e3779b97f4a7c15ULL;
  std::uint64_t x = z;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
  std::uint64_t z = seed ^ rotl(stream_id, 17) ^ 0x6a09e667f3bcc909ULL;
  for (auto& s : state_) s = splitmix64(z);
  // all-zero state is invalid for xoshiro; splitmix64 makes it unreachable in
  // practice, but guard anyway
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

Rng::Rng(std::uint64_t seed, std::string_view stream_name) : Rng(seed, hash_name(stream_name)) {}

std::uint64_t Rng::hash_name(std::string_view name) {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng Rng::split(std::string_view stream_name) const {
  return Rng(seed_, stream_id_ * 0x9e3779b97f4a7c15ULL + hash_name(stream_name));
}

Rng Rng::split(std::uint64_t index) const {
  return Rng(seed_, stream_id_ * 0x9e3779b97f4a7c15ULL + index + 1);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

std::uint64_t Rng::uniform_below(std::uint64_t n) {
  // rejection sampling to avoid modulo bias
  const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  // Box-Muller; u1 shifted away from 0 so log stays finite
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(a);
  has_spare_normal_ = true;
  return r * std::cos(a);
}

double Rng::normal(double mean, double stddev) { return mean + stddev * normal(); }

}  // namespace fsmc
