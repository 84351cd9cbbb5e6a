#include "podpo/instrumentation.hpp"

namespace podpo::instrumentation {

Counters& counters() {
  static Counters instance;
  return instance;
}

void reset() {
  auto& c = counters();
  c.gaussian_log_prob = 0;
  c.ratio_clip = 0;
  c.value_clip = 0;
}

}  // namespace podpo::instrumentation
