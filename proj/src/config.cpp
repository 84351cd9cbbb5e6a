#include "podpo/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "podpo/errors.hpp"

namespace podpo {
namespace {

using nlohmann::ordered_json;

// One accessor pair per key keeps serialization and parsing in lockstep.
template <class F>
void visit_fields(TrainConfig& c, F&& f) {
  f("algorithm", c.algorithm);
  f("env", c.env);
  f("num_envs", c.num_envs);
  f("steps", c.steps);
  f("iterations", c.iterations);
  f("seed", c.seed);
  f("G", c.group);
  f("beta", c.beta);
  f("temps", c.temps);
  f("advantage_weighting", c.advantage_weighting);
  f("gamma", c.gamma);
  f("lambda", c.lambda);
  f("epochs", c.epochs);
  f("minibatch_size", c.minibatch_size);
  f("actor_lr", c.actor_lr);
  f("critic_lr", c.critic_lr);
  f("adam_beta1", c.adam_beta1);
  f("adam_beta2", c.adam_beta2);
  f("adam_eps", c.adam_eps);
  f("value_clip", c.value_clip);
  f("value_coef", c.value_coef);
  f("ppo_clip", c.ppo_clip);
  f("hidden_width", c.hidden_width);
  f("hidden_layers", c.hidden_layers);
  f("noise_dim", c.noise_dim);
  f("checkpoint_interval", c.checkpoint_interval);
  f("record_wall_ms", c.record_wall_ms);
  f("bandit_mode_x", c.env_params.bandit_mode_x);
  f("bandit_sigma", c.env_params.bandit_sigma);
  f("bandit_action_bound", c.env_params.bandit_action_bound);
  f("point_mass_dt", c.env_params.point_mass_dt);
  f("point_mass_horizon", c.env_params.point_mass_horizon);
  f("point_mass_goal_radius", c.env_params.point_mass_goal_radius);
  f("point_mass_bonus", c.env_params.point_mass_bonus);
  f("point_mass_action_bound", c.env_params.point_mass_action_bound);
}

template <class T>
void write_field(ordered_json& j, const char* key, const T& value) {
  j[key] = value;
}

void write_field(ordered_json& j, const char* key, const Algorithm& value) { j[key] = to_string(value); }

template <class T>
void read_field(const ordered_json& j, const char* key, T& value) {
  try {
    value = j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(key, "wrong type: " + j.dump());
  }
}

void read_field(const ordered_json& j, const char* key, Algorithm& value) {
  if (!j.is_string()) {
    throw ConfigError(key, "expected a string");
  }
  value = parse_algorithm(j.get<std::string>());
}

void read_field(const ordered_json& j, const char* key, std::uint64_t& value) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0)) {
    throw ConfigError(key, "expected a non-negative integer");
  }
  value = j.get<std::uint64_t>();
}

void read_field(const ordered_json& j, const char* key, int& value) {
  if (!j.is_number_integer()) {
    throw ConfigError(key, "expected an integer");
  }
  value = j.get<int>();
}

void read_field(const ordered_json& j, const char* key, std::vector<double>& value) {
  if (j.is_number()) {
    value = {j.get<double>()};
    return;
  }
  if (j.is_string()) {
    value = parse_list(j.get<std::string>());
    return;
  }
  if (!j.is_array()) {
    throw ConfigError(key, "expected a list of numbers");
  }
  value.clear();
  for (const auto& item : j) {
    if (!item.is_number()) {
      throw ConfigError(key, "expected a list of numbers");
    }
    value.push_back(item.get<double>());
  }
}

void apply_json(TrainConfig& config, const ordered_json& doc) {
  if (!doc.is_object()) {
    throw ConfigError("<root>", "config must be a JSON object");
  }
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool known = false;
    visit_fields(config, [&](const char* key, auto& field) {
      if (it.key() == key) {
        read_field(it.value(), key, field);
        known = true;
      }
    });
    if (!known) {
      throw ConfigError(it.key(), "unknown key");
    }
  }
}

void require(bool ok, const char* field, const char* constraint) {
  if (!ok) {
    throw ConfigError(field, constraint);
  }
}

}  // namespace

std::string to_string(Algorithm algorithm) {
  return algorithm == Algorithm::podpo ? "podpo" : "ppo_baseline";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "podpo") return Algorithm::podpo;
  if (name == "ppo_baseline") return Algorithm::ppo_baseline;
  throw ConfigError("algorithm", "must be podpo or ppo_baseline, got '" + name + "'");
}

void TrainConfig::validate() const {
  require(env == "bimodal_bandit" || env == "point_mass", "env", "must be bimodal_bandit or point_mass");
  require(num_envs >= 1, "num_envs", "must be >= 1");
  require(steps >= 1, "steps", "must be >= 1");
  require(iterations >= 0, "iterations", "must be >= 0");
  require(num_envs * steps >= 2, "steps", "num_envs * steps must be >= 2 for advantage normalization");
  require(group >= 1, "G", "must be >= 1");
  require(beta >= 0.0, "beta", "must be >= 0");
  require(!temps.empty(), "temps", "must be non-empty");
  for (const double t : temps) {
    require(std::isfinite(t) && t > 0.0, "temps", "every temperature must be finite and > 0");
  }
  require(gamma >= 0.0 && gamma <= 1.0, "gamma", "must lie in [0, 1]");
  require(lambda >= 0.0 && lambda <= 1.0, "lambda", "must lie in [0, 1]");
  require(epochs >= 1, "epochs", "must be >= 1");
  require(minibatch_size >= 1, "minibatch_size", "must be >= 1");
  require(actor_lr > 0.0, "actor_lr", "must be > 0");
  require(critic_lr > 0.0, "critic_lr", "must be > 0");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam_beta1", "must lie in [0, 1)");
  require(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam_beta2", "must lie in [0, 1)");
  require(adam_eps > 0.0, "adam_eps", "must be > 0");
  require(value_clip > 0.0, "value_clip", "must be > 0");
  require(value_coef > 0.0, "value_coef", "must be > 0");
  require(ppo_clip > 0.0, "ppo_clip", "must be > 0");
  require(hidden_width >= 1, "hidden_width", "must be >= 1");
  require(hidden_layers >= 0, "hidden_layers", "must be >= 0");
  require(noise_dim >= 0, "noise_dim", "must be >= 0");
  require(checkpoint_interval >= 0, "checkpoint_interval", "must be >= 0");
  require(env_params.bandit_sigma > 0.0, "bandit_sigma", "must be > 0");
  require(env_params.bandit_action_bound > 0.0, "bandit_action_bound", "must be > 0");
  require(env_params.point_mass_dt > 0.0, "point_mass_dt", "must be > 0");
  require(env_params.point_mass_horizon >= 1, "point_mass_horizon", "must be >= 1");
  require(env_params.point_mass_goal_radius >= 0.0, "point_mass_goal_radius", "must be >= 0");
  require(env_params.point_mass_action_bound > 0.0, "point_mass_action_bound", "must be > 0");
}

std::string to_json_text(const TrainConfig& config) {
  ordered_json j = ordered_json::object();
  TrainConfig copy = config;
  visit_fields(copy, [&](const char* key, const auto& field) { write_field(j, key, field); });
  return j.dump(2) + "\n";
}

TrainConfig config_from_json_text(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  TrainConfig config;
  apply_json(config, doc);
  config.validate();
  return config;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("<file>", "cannot open " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_json_text(buffer.str());
}

void apply_override(TrainConfig& config, const std::string& key, const std::string& value) {
  ordered_json parsed;
  try {
    parsed = ordered_json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    parsed = value;  // bare string such as an env name
  }
  if (key == "temps" && !parsed.is_array() && !parsed.is_number()) {
    parsed = value;
  }
  ordered_json doc = ordered_json::object();
  doc[key] = parsed;
  apply_json(config, doc);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) {
        throw ConfigError("temps", "cannot parse '" + item + "'");
      }
    } catch (const std::logic_error&) {
      throw ConfigError("temps", "cannot parse '" + item + "'");
    }
  }
  return out;
}

}  // namespace podpo
