#ifndef PODPO_CONFIG_HPP
#define PODPO_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "podpo/envs.hpp"

namespace podpo {

enum class Algorithm { podpo, ppo_baseline };

std::string to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& name);

/// Every hyperparameter of a run. The serialized form is a flat JSON object
/// with one key per field below (env constants included).
struct TrainConfig {
  Algorithm algorithm = Algorithm::podpo;
  std::string env = "bimodal_bandit";
  int num_envs = 16;
  int steps = 64;
  int iterations = 100;
  std::uint64_t seed = 0;

  int group = 8;  ///< candidates per positive observation (G)
  double beta = 0.1;
  std::vector<double> temps{0.02, 0.15, 2.0};
  bool advantage_weighting = true;

  double gamma = 0.99;
  double lambda = 0.95;
  int epochs = 4;
  int minibatch_size = 256;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double value_clip = 0.2;
  double value_coef = 0.5;
  double ppo_clip = 0.2;

  int hidden_width = 64;
  int hidden_layers = 2;
  int noise_dim = 0;  ///< 0: same as the action dimension

  int checkpoint_interval = 0;  ///< 0: only at the end
  bool record_wall_ms = false;  ///< wall time breaks byte-identical metrics, so it is opt-in

  EnvParams env_params;

  /// Throws ConfigError naming the first field that violates its constraint.
  void validate() const;
};

/// Flat JSON text of the config (stable key order).
std::string to_json_text(const TrainConfig& config);
/// Parses a flat JSON document; missing keys keep their defaults, unknown keys are errors.
TrainConfig config_from_json_text(const std::string& text);
TrainConfig load_config(const std::string& path);

/// Applies one `--key value` override. Lists are comma separated.
void apply_override(TrainConfig& config, const std::string& key, const std::string& value);

/// Parses "0.02,0.15,2.0".
std::vector<double> parse_list(const std::string& text);

}  // namespace podpo

#endif  // PODPO_CONFIG_HPP
