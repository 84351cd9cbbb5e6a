#ifndef PODPO_INSTRUMENTATION_HPP
#define PODPO_INSTRUMENTATION_HPP

#include <atomic>
#include <cstdint>

namespace podpo::instrumentation {

/// Process-wide call counters for operations the generative training path must
/// never touch. Tests reset them, run PODPO, and assert they stayed at zero.
struct Counters {
  std::atomic<std::uint64_t> gaussian_log_prob{0};
  std::atomic<std::uint64_t> ratio_clip{0};
  std::atomic<std::uint64_t> value_clip{0};
};

Counters& counters();
void reset();

}  // namespace podpo::instrumentation

#endif  // PODPO_INSTRUMENTATION_HPP
