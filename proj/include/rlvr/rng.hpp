#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rlvr {

// Counter-based deterministic RNG. Every consumer derives its own stream
// from a hierarchical key, so worker scheduling can never change results.
namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(s);
}
}  // namespace detail

class RngStream {
 public:
  explicit RngStream(std::uint64_t state) : state_(state) {}

  std::uint64_t next_u64() { return detail::splitmix64(state_); }

  // Uniform in [0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, n), n > 0.
  std::uint64_t next_below(std::uint64_t n) {
    // Modulo bias is negligible for the small ranges used here.
    return next_u64() % n;
  }

  // Uniform integer in [lo, hi], inclusive.
  std::int64_t next_range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Index sampled from a categorical distribution given by probs.
  std::size_t next_categorical(std::span<const double> probs) {
    double u = next_unit();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return probs.empty() ? 0 : probs.size() - 1;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = next_below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Hierarchical stream key: root(seed, purpose).child(stage).child(step)...
struct RngKey {
  std::uint64_t value = 0;

  static RngKey root(std::uint64_t seed, std::uint64_t purpose) {
    return RngKey{detail::mix(seed, purpose)};
  }

  RngKey child(std::uint64_t index) const {
    return RngKey{detail::mix(value, index + 0x632be59bd9b4e019ULL)};
  }

  RngStream stream() const { return RngStream(value); }
};

// Stream purposes; part of the reproducibility contract.
namespace purpose {
inline constexpr std::uint64_t kCorpus = 1;
inline constexpr std::uint64_t kWarmstart = 2;
inline constexpr std::uint64_t kProbe = 3;
inline constexpr std::uint64_t kRollout = 4;
inline constexpr std::uint64_t kEval = 5;
inline constexpr std::uint64_t kHoldout = 6;
}  // namespace purpose

}  // namespace rlvr
