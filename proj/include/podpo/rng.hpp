#ifndef PODPO_RNG_HPP
#define PODPO_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Core>

namespace podpo {

/// Deterministic random stream identified by (master seed, name, index).
///
/// Every consumer of randomness owns its own stream so that results do not
/// depend on call interleaving: env resets, rollout noise, candidate noise
/// and minibatch shuffling never share an engine.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::string_view name, std::uint64_t index = 0)
      : engine_(derive_seed(master_seed, name, index)) {}

  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }
  std::uint64_t next_u64() { return engine_(); }

  template <class Scalar = double>
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(rows, cols);
    // Row-major fill so the draw order matches row-by-row consumption.
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        out(r, c) = static_cast<Scalar>(normal());
      }
    }
    return out;
  }

  std::mt19937_64& engine() { return engine_; }

  /// SplitMix64-style mixing of the stream identity into a 64-bit seed.
  static std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view name, std::uint64_t index) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the name
    for (const char c : name) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    std::uint64_t z = master_seed ^ (h + 0x9e3779b97f4a7c15ULL + (index << 6) + (index >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace podpo

#endif  // PODPO_RNG_HPP
