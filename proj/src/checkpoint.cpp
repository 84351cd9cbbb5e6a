#include "podpo/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "podpo/errors.hpp"

namespace podpo {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
}

void put_f64(std::string& out, double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
  }
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  double f64(const char* what) {
    need(8, what);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(std::string("truncated checkpoint while reading ") + what + " at byte " +
                            std::to_string(pos_));
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

NdArray from_matrix(const MatrixXd& m) {
  NdArray a{{static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())}, {}};
  a.values.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      a.values.push_back(m(r, c));
    }
  }
  return a;
}

NdArray from_vector(const VectorXd& v) {
  return {{static_cast<std::uint32_t>(v.size())}, std::vector<double>(v.data(), v.data() + v.size())};
}

NdArray from_scalar(double s) { return {{}, {s}}; }

void append_mlp(std::vector<NdArray>& out, const MlpParamsd& p) {
  for (const auto& layer : p.layers) {
    out.push_back(from_matrix(layer.weight));
    out.push_back(from_vector(layer.bias));
  }
}

/// Sequential consumer that checks every array against the expected shape.
class Cursor {
 public:
  explicit Cursor(const std::vector<NdArray>& arrays) : arrays_(arrays) {}

  const NdArray& next(const std::vector<std::uint32_t>& dims, const std::string& what) {
    if (index_ >= arrays_.size()) {
      throw CheckpointError("checkpoint has too few arrays: missing " + what);
    }
    const auto& a = arrays_[index_++];
    if (a.dims != dims) {
      throw CheckpointError("checkpoint shape mismatch for " + what + " (array " + std::to_string(index_ - 1) + ")");
    }
    return a;
  }

  void matrix(MatrixXd& m, const std::string& what) {
    const auto& a = next({static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())}, what);
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = a.values[i++];
      }
    }
  }

  void vector(VectorXd& v, const std::string& what) {
    const auto& a = next({static_cast<std::uint32_t>(v.size())}, what);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      v(i) = a.values[static_cast<std::size_t>(i)];
    }
  }

  void mlp(MlpParamsd& p, const std::string& what) {
    for (std::size_t k = 0; k < p.layers.size(); ++k) {
      matrix(p.layers[k].weight, what + " layer " + std::to_string(k) + " W");
      vector(p.layers[k].bias, what + " layer " + std::to_string(k) + " b");
    }
  }

  long step(const std::string& what) {
    const auto& a = next({}, what);
    return static_cast<long>(a.values.front());
  }

  void finish() const {
    if (index_ != arrays_.size()) {
      throw CheckpointError("checkpoint has " + std::to_string(arrays_.size() - index_) + " unexpected trailing arrays");
    }
  }

 private:
  const std::vector<NdArray>& arrays_;
  std::size_t index_ = 0;
};

}  // namespace

std::string encode_checkpoint(const std::vector<NdArray>& arrays, std::uint32_t version) {
  std::string out(kCheckpointMagic);
  put_u32(out, version);
  for (const auto& a : arrays) {
    std::size_t count = 1;
    for (const auto d : a.dims) count *= d;
    if (count != a.values.size()) {
      throw CheckpointError("array dims do not match value count");
    }
    put_u32(out, static_cast<std::uint32_t>(a.dims.size()));
    for (const auto d : a.dims) put_u32(out, d);
    for (const double v : a.values) put_f64(out, v);
  }
  return out;
}

std::vector<NdArray> decode_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  const auto magic = in.take(kCheckpointMagic.size(), "magic");
  if (magic != kCheckpointMagic) {
    throw CheckpointError("bad checkpoint magic: expected " + std::string(kCheckpointMagic) + ", found '" +
                          std::string(magic) + "'");
  }
  const std::uint32_t version = in.u32("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("incompatible checkpoint version: expected " + std::to_string(kCheckpointVersion) +
                          ", found " + std::to_string(version));
  }
  std::vector<NdArray> arrays;
  while (!in.done()) {
    NdArray a;
    const std::uint32_t rank = in.u32("rank");
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      a.dims.push_back(in.u32("dims"));
      count *= a.dims.back();
    }
    if (count > in.remaining() / 8) {
      throw CheckpointError("truncated checkpoint: array " + std::to_string(arrays.size()) + " needs " +
                            std::to_string(count) + " values");
    }
    a.values.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      a.values.push_back(in.f64("values"));
    }
    arrays.push_back(std::move(a));
  }
  return arrays;
}

void write_checkpoint_file(const std::string& path, const std::vector<NdArray>& arrays) {
  const std::string bytes = encode_checkpoint(arrays);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw CheckpointError("cannot write checkpoint " + path);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw CheckpointError("failed writing checkpoint " + path);
  }
}

std::vector<NdArray> read_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CheckpointError("cannot open checkpoint " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return decode_checkpoint(buffer.str());
}

std::vector<NdArray> pack_state(const TrainState& state) {
  std::vector<NdArray> out;
  if (state.actor) append_mlp(out, state.actor->net);
  append_mlp(out, state.critic.net);
  if (state.baseline) {
    append_mlp(out, state.baseline->mean_net);
    out.push_back(from_vector(state.baseline->log_std));
  }
  if (state.actor_opt) {
    append_mlp(out, state.actor_opt->first_moment);
    append_mlp(out, state.actor_opt->second_moment);
    out.push_back(from_scalar(static_cast<double>(state.actor_opt->step)));
  }
  append_mlp(out, state.critic_opt.first_moment);
  append_mlp(out, state.critic_opt.second_moment);
  out.push_back(from_scalar(static_cast<double>(state.critic_opt.step)));
  if (state.baseline_opt) {
    append_mlp(out, state.baseline_opt->net.first_moment);
    out.push_back(from_vector(state.baseline_opt->log_std_m));
    append_mlp(out, state.baseline_opt->net.second_moment);
    out.push_back(from_vector(state.baseline_opt->log_std_v));
    out.push_back(from_scalar(static_cast<double>(state.baseline_opt->net.step)));
  }
  return out;
}

void unpack_state(TrainState& state, const std::vector<NdArray>& arrays) {
  // Fill copies first so a failure leaves `state` untouched.
  auto actor = state.actor;
  auto actor_opt = state.actor_opt;
  auto critic = state.critic;
  auto critic_opt = state.critic_opt;
  auto baseline = state.baseline;
  auto baseline_opt = state.baseline_opt;

  Cursor cur(arrays);
  if (actor) cur.mlp(actor->net, "actor");
  cur.mlp(critic.net, "critic");
  if (baseline) {
    cur.mlp(baseline->mean_net, "baseline actor");
    cur.vector(baseline->log_std, "baseline log_std");
  }
  if (actor_opt) {
    cur.mlp(actor_opt->first_moment, "actor adam m");
    cur.mlp(actor_opt->second_moment, "actor adam v");
    actor_opt->step = cur.step("actor adam step");
  }
  cur.mlp(critic_opt.first_moment, "critic adam m");
  cur.mlp(critic_opt.second_moment, "critic adam v");
  critic_opt.step = cur.step("critic adam step");
  if (baseline_opt) {
    cur.mlp(baseline_opt->net.first_moment, "baseline adam m");
    cur.vector(baseline_opt->log_std_m, "baseline log_std adam m");
    cur.mlp(baseline_opt->net.second_moment, "baseline adam v");
    cur.vector(baseline_opt->log_std_v, "baseline log_std adam v");
    baseline_opt->net.step = cur.step("baseline adam step");
  }
  cur.finish();

  state.actor = std::move(actor);
  state.actor_opt = std::move(actor_opt);
  state.critic = std::move(critic);
  state.critic_opt = std::move(critic_opt);
  state.baseline = std::move(baseline);
  state.baseline_opt = std::move(baseline_opt);
}

void save_checkpoint(const TrainState& state, const std::string& path) {
  write_checkpoint_file(path, pack_state(state));
}

void load_checkpoint(TrainState& state, const std::string& path) { unpack_state(state, read_checkpoint_file(path)); }

}  // namespace podpo
