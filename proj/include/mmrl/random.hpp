#pragma once

#include <cstdint>
#include <limits>

#include <Eigen/Core>

namespace mmrl {

// Counter-based generator: the output at position n is a fixed mixing
// function of (key, n), so a stream is fully described by two integers and
// child streams can be derived from (parent key, index) without touching the
// parent. Satisfies UniformRandomBitGenerator.
class RandomState {
 public:
  using result_type = std::uint64_t;

  explicit RandomState(std::uint64_t seed = 0) : key_(mix(seed ^ kSeedSalt)) {}

  // Independent child stream; does not advance *this.
  [[nodiscard]] RandomState split(std::uint64_t index) const {
    RandomState child;
    child.key_ = mix(key_ ^ mix(index + kGolden));
    return child;
  }

  result_type operator()() { return mix(key_ + (++counter_) * kGolden); }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the second variate of each pair is kept.
  double normal();

  Eigen::VectorXd normal_vector(Eigen::Index n, double sigma = 1.0);

  [[nodiscard]] std::uint64_t key() const { return key_; }
  [[nodiscard]] std::uint64_t counter() const { return counter_; }

  friend bool operator==(const RandomState&, const RandomState&) = default;

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kSeedSalt = 0x5851f42d4c957f2dULL;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mmrl
