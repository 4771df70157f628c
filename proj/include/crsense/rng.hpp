#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace crsense {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives decorrelated child seeds (per run, per stream) from one master seed.
inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

// mt19937_64 plus hand-rolled variate mappings. std:: distributions are
// implementation-defined, so sequences produced through them would not be
// stable across standard libraries; these mappings are fixed.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Unbiased integer in [0, n); n >= 1.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t min = (-n) % n;
    std::uint64_t x = gen_();
    while (x < min) x = gen_();
    return x % n;
  }

  // Fisher-Yates.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// Named per-run streams. Each stochastic mechanism draws from its own stream,
// so toggling one mechanism does not shift the draws seen by the others.
struct RngStreams {
  RandomStream occupancy;    // primary-user band states
  RandomStream local;        // local detector outcomes
  RandomStream coin;         // fusion-rule randomization
  RandomStream exploration;  // phase choice and random sensing plans
  RandomStream access;       // random access grants
  RandomStream rate;         // optional rate-noise hook

  explicit RngStreams(std::uint64_t run_seed)
      : occupancy(child_seed(run_seed, 1)),
        local(child_seed(run_seed, 2)),
        coin(child_seed(run_seed, 3)),
        exploration(child_seed(run_seed, 4)),
        access(child_seed(run_seed, 5)),
        rate(child_seed(run_seed, 6)) {}
};

}  // namespace crsense
