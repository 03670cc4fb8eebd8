#pragma once

#include <cstdint>
#include <string_view>

namespace fsmc {

// Deterministic splittable random stream: xoshiro256++ seeded through
// splitmix64 from a (seed, stream-id) pair.  Named sub-streams make parallel
// chains reproducible independent of scheduling: a stream is identified by
// what it is for, never by when it was created.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : Rng(seed, 0) {}
  Rng(std::uint64_t seed, std::uint64_t stream_id);
  Rng(std::uint64_t seed, std::string_view stream_name);

  // Derived stream; independent of how much the parent has been consumed.
  Rng split(std::string_view stream_name) const;
  Rng split(std::uint64_t index) const;

  std::uint64_t next_u64();
  double uniform01();                          // in [0, 1)
  double uniform(double lo, double hi);        // in [lo, hi)
  std::uint64_t uniform_below(std::uint64_t n);  // in [0, n)
  double normal();                             // standard normal (Box-Muller)
  double normal(double mean, double stddev);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  static std::uint64_t hash_name(std::string_view name);

 private:
  std::uint64_t state_[4];
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_normal_ = false;
};

}  // namespace fsmc
