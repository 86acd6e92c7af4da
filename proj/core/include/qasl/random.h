#ifndef QASL_RANDOM_H_
#define QASL_RANDOM_H_

#include <cstdint>
#include <random>
#include <vector>

namespace qasl {

// Deterministic RNG. The standard distributions are implementation-defined,
// so sampling is done here on top of the raw mt19937_64 stream to keep
// outputs identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform integer in [0, n). n must be > 0.
  uint64_t UniformIndex(uint64_t n);

  // Uniform double in [0, 1).
  double Uniform();

  double Normal(double mean, double stddev);

  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      const size_t j = UniformIndex(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  // Random permutation of [0, n).
  std::vector<size_t> Permutation(size_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Mixes a base seed with a stream id (splitmix64 finalizer).
uint64_t DeriveSeed(uint64_t seed, uint64_t stream);

}  // namespace qasl

#endif  // QASL_RANDOM_H_
