#ifndef PODPO_CHECKPOINT_HPP
#define PODPO_CHECKPOINT_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "podpo/trainer.hpp"

/**
 * \file
 * \brief Binary checkpoints.
 *
 * Layout (all integers u32 little-endian, values f64 little-endian):
 *
 *     "PODPOCK1" | version | { rank | dims[rank] | values (row-major) }*
 *
 * Array order: generative-actor layers (W, b interleaved), critic layers,
 * Gaussian baseline layers followed by its log_std (when present), then the
 * Adam states in the same network order. Each Adam state contributes its
 * first moments, its second moments (both W, b interleaved; log_std moments
 * after the baseline's) and a rank-0 array holding the step counter.
 */

namespace podpo {

inline constexpr std::string_view kCheckpointMagic = "PODPOCK1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Dense array of any rank, values in row-major order.
struct NdArray {
  std::vector<std::uint32_t> dims;
  std::vector<double> values;

  bool operator==(const NdArray&) const = default;
};

std::string encode_checkpoint(const std::vector<NdArray>& arrays, std::uint32_t version = kCheckpointVersion);
/// Parses the whole buffer or throws CheckpointError; never returns a partial result.
std::vector<NdArray> decode_checkpoint(std::string_view bytes);

void write_checkpoint_file(const std::string& path, const std::vector<NdArray>& arrays);
std::vector<NdArray> read_checkpoint_file(const std::string& path);

/// Flattens the learnable state of a run in checkpoint order.
std::vector<NdArray> pack_state(const TrainState& state);
/// Restores parameters and optimizer state; shapes must match `state`'s config.
/// `state` is untouched if anything fails.
void unpack_state(TrainState& state, const std::vector<NdArray>& arrays);

void save_checkpoint(const TrainState& state, const std::string& path);
void load_checkpoint(TrainState& state, const std::string& path);

}  // namespace podpo

#endif  // PODPO_CHECKPOINT_HPP
