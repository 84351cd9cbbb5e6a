#ifndef PODPO_TESTS_SOURCE_SCAN_HPP
#define PODPO_TESTS_SOURCE_SCAN_HPP

// Static scan of the PODPO actor path for likelihood ratios, clipping and
// trust-region terms. Shared by the unit tests and the acceptance binary.

#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace podpo::scan {

inline std::string read_source(const std::string& relative) {
  std::ifstream in(std::string(PODPO_SOURCE_DIR) + "/" + relative);
  if (!in) {
    throw std::runtime_error("cannot read " + relative);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string strip_comments(const std::string& code) { return std::regex_replace(code, std::regex("//[^\n]*"), ""); }

inline std::string between(const std::string& text, const std::string& begin, const std::string& end) {
  const auto b = text.find(begin);
  const auto e = b == std::string::npos ? std::string::npos : text.find(end, b);
  if (e == std::string::npos) {
    throw std::runtime_error("source anchor not found: " + begin);
  }
  return text.substr(b, e - b);
}

struct Finding {
  std::string where;
  std::string token;
};

/// Code units on the actor path of the positive-only update, comments stripped.
inline std::vector<std::pair<std::string, std::string>> actor_path_sources() {
  const std::string losses = read_source("src/losses.cpp");
  return {
      {"src/podpo_update.cpp", read_source("src/podpo_update.cpp")},
      {"include/podpo/drift.hpp", read_source("include/podpo/drift.hpp")},
      {"drifting_loss", between(losses, "DriftLossResult drifting_loss(", "ValueLossResult value_loss_clipped(")},
      {"drift_weights_for", between(losses, "VectorXd drift_weights_for(", "DriftInputs<double> podpo_drift_inputs(")},
      {"adam_step", between(read_source("include/podpo/nn.hpp"), "void adam_step(", "/// Visits every parameter")},
  };
}

/// Every forbidden token found on the actor path. Empty means clean.
inline std::vector<Finding> scan_actor_path() {
  const std::regex forbidden(
      R"(\bratio\b|clip|clamp|trust|\bkl\b|log_prob|surrogate|grad_norm|gradient_norm|max_norm|logp)",
      std::regex::icase);
  std::vector<Finding> out;
  for (const auto& [name, code] : actor_path_sources()) {
    const std::string stripped = strip_comments(code);
    for (auto it = std::sregex_iterator(stripped.begin(), stripped.end(), forbidden); it != std::sregex_iterator();
         ++it) {
      out.push_back({name, it->str()});
    }
  }
  return out;
}

}  // namespace podpo::scan

#endif  // PODPO_TESTS_SOURCE_SCAN_HPP
