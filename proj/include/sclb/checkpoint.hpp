#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>

#include "sclb/arch.hpp"
#include "sclb/optim.hpp"

namespace sclb {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format stores 32-bit little-endian reals");

namespace ckpt_detail {

inline void write_raw(std::ofstream& f, const void* p, std::size_t n) {
  f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename V>
void write_pod(std::ofstream& f, V v) {
  write_raw(f, &v, sizeof(v));
}

inline void write_str(std::ofstream& f, const std::string& s) {
  write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(s.size()));
  write_raw(f, s.data(), s.size());
}

inline void write_tensor(std::ofstream& f, const Tensor<float>& t) {
  write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) write_pod<std::uint64_t>(f, d);
  write_raw(f, t.data(), t.size() * sizeof(float));
}

struct Reader {
  std::ifstream f;
  std::string path;

  void read_raw(void* p, std::size_t n) {
    f.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!f) throw FormatError("checkpoint '" + path + "': truncated at offset " + std::to_string(static_cast<long long>(f.gcount())));
  }
  template <typename V>
  V read_pod() {
    V v;
    read_raw(&v, sizeof(v));
    return v;
  }
  std::string read_str() {
    const auto n = read_pod<std::uint32_t>();
    std::string s(n, '\0');
    read_raw(s.data(), n);
    return s;
  }
  Tensor<float> read_tensor() {
    const auto rank = read_pod<std::uint32_t>();
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(read_pod<std::uint64_t>());
    Tensor<float> t(shape);
    read_raw(t.data(), t.size() * sizeof(float));
    return t;
  }
};

}  // namespace ckpt_detail

inline constexpr char kCheckpointMagic[4] = {'S', 'C', 'L', 'B'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ArchSpec arch;
  bool exact_sums = false;
  OptimizerConfig opt;
  std::uint64_t step = 0;
  std::vector<double> channel_mean, channel_std;  // training-split standardization
  std::map<std::string, std::string> rng_states;  // named engine states
  Network<float> net;
  OptimizerState<float> opt_state;
};

inline void save_checkpoint(const std::string& path, Network<float>& net, const ArchSpec& arch,
                            bool exact_sums, const OptimizerConfig& opt,
                            const OptimizerState<float>& state,
                            const std::map<std::string, std::string>& rng_states,
                            const std::vector<double>& channel_mean = {},
                            const std::vector<double>& channel_std = {}) {
  using namespace ckpt_detail;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write '" + path + "'");
  write_raw(f, kCheckpointMagic, 4);
  write_pod<std::uint32_t>(f, kCheckpointVersion);
  write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(arch.family));
  write_pod<std::uint32_t>(f, arch.alpha);
  write_pod<std::uint32_t>(f, arch.image_size);
  write_pod<std::uint32_t>(f, arch.in_channels);
  write_pod<std::uint32_t>(f, arch.num_classes);
  write_pod<std::uint32_t>(f, arch.hidden);
  write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(arch.dropout));
  write_pod<double>(f, arch.dropout_rate);
  write_pod<std::uint8_t>(f, exact_sums ? 1 : 0);
  write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(channel_mean.size()));
  for (double v : channel_mean) write_pod<double>(f, v);
  for (double v : channel_std) write_pod<double>(f, v);

  write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(opt.algorithm));
  write_pod<double>(f, opt.eta0);
  write_pod<double>(f, opt.lambda_conv);
  write_pod<double>(f, opt.lambda_fc);
  write_pod<double>(f, opt.beta);
  write_pod<double>(f, opt.momentum);
  write_pod<double>(f, opt.weight_decay);
  write_pod<std::uint64_t>(f, opt.total_steps);
  write_pod<std::uint64_t>(f, state.step);

  write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(rng_states.size()));
  for (const auto& [name, st] : rng_states) {
    write_str(f, name);
    write_str(f, st);
  }

  auto params = net.parameters();
  write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(params.size()));
  for (Parameter<float>* p : params) {
    write_str(f, p->name);
    write_tensor(f, p->value);
  }

  write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(state.velocity.size()));
  for (const auto& [name, v] : state.velocity) {
    write_str(f, name);
    write_tensor(f, v);
  }

  auto buffers = net.buffers();
  write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(buffers.size()));
  for (auto& [name, t] : buffers) {
    write_str(f, name);
    write_tensor(f, *t);
  }
  if (!f) throw FormatError("write failed for '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  using namespace ckpt_detail;
  Reader r;
  r.path = path;
  r.f.open(path, std::ios::binary);
  if (!r.f) throw FormatError("cannot open '" + path + "'");
  char magic[4];
  r.read_raw(magic, 4);
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw FormatError("checkpoint '" + path + "': bad magic bytes at offset 0");
  const auto version = r.read_pod<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint '" + path + "': unsupported version " + std::to_string(version));

  Checkpoint c;
  c.arch.family = static_cast<Family>(r.read_pod<std::uint32_t>());
  c.arch.alpha = r.read_pod<std::uint32_t>();
  c.arch.image_size = r.read_pod<std::uint32_t>();
  c.arch.in_channels = r.read_pod<std::uint32_t>();
  c.arch.num_classes = r.read_pod<std::uint32_t>();
  c.arch.hidden = r.read_pod<std::uint32_t>();
  c.arch.dropout = static_cast<DropoutPlacement>(r.read_pod<std::uint32_t>());
  c.arch.dropout_rate = r.read_pod<double>();
  c.exact_sums = r.read_pod<std::uint8_t>() != 0;
  const auto n_stats = r.read_pod<std::uint32_t>();
  c.channel_mean.resize(n_stats);
  c.channel_std.resize(n_stats);
  for (auto& v : c.channel_mean) v = r.read_pod<double>();
  for (auto& v : c.channel_std) v = r.read_pod<double>();

  c.opt.algorithm = static_cast<Algorithm>(r.read_pod<std::uint32_t>());
  c.opt.eta0 = r.read_pod<double>();
  c.opt.lambda_conv = r.read_pod<double>();
  c.opt.lambda_fc = r.read_pod<double>();
  c.opt.beta = r.read_pod<double>();
  c.opt.momentum = r.read_pod<double>();
  c.opt.weight_decay = r.read_pod<double>();
  c.opt.total_steps = r.read_pod<std::uint64_t>();
  c.step = r.read_pod<std::uint64_t>();
  c.opt_state.step = c.step;

  const auto n_rng = r.read_pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_rng; ++i) {
    std::string name = r.read_str();
    c.rng_states[name] = r.read_str();
  }

  c.net = build<float>(c.arch, 0);
  c.net.set_exact_sums(c.exact_sums);

  const auto n_params = r.read_pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_params; ++i) {
    const std::string name = r.read_str();
    Tensor<float> t = r.read_tensor();
    Parameter<float>* p = c.net.find_parameter(name);
    if (!p) throw FormatError("checkpoint '" + path + "': unknown parameter '" + name + "'");
    if (!p->value.same_shape(t))
      throw FormatError("checkpoint '" + path + "': shape mismatch for '" + name + "'");
    p->value = std::move(t);
  }

  const auto n_vel = r.read_pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_vel; ++i) {
    const std::string name = r.read_str();
    c.opt_state.velocity.emplace(name, r.read_tensor());
  }

  const auto n_buf = r.read_pod<std::uint32_t>();
  auto buffers = c.net.buffers();
  for (std::uint32_t i = 0; i < n_buf; ++i) {
    const std::string name = r.read_str();
    Tensor<float> t = r.read_tensor();
    bool found = false;
    for (auto& [bname, bt] : buffers)
      if (bname == name) {
        *bt = std::move(t);
        found = true;
        break;
      }
    if (!found) throw FormatError("checkpoint '" + path + "': unknown buffer '" + name + "'");
  }

  if (auto it = c.rng_states.find("dropout"); it != c.rng_states.end())
    c.net.dropout_rng().load_state(it->second);
  return c;
}

}  // namespace sclb
