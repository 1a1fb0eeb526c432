#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "sclb/arch.hpp"
#include "sclb/optim.hpp"

namespace sclb {

/// Everything a training run needs. Mirrors the flat key=value config file;
/// command-line flags override file values.
struct RunConfig {
  // architecture
  std::string arch = "s-fc";
  std::uint32_t alpha = 1;
  std::uint32_t hidden = 0;  // 3-fc width
  std::string dropout = "none";  // none | last_two
  double dropout_rate = 0.5;

  // data
  std::string dataset = "mnist";  // mnist | cifar10 | cifar100
  std::string data_dir = "data";
  double val_fraction = 0.1;
  bool augment = false;
  std::uint32_t pad = 4;
  bool hflip = true;

  // optimizer
  std::string optimizer = "sgd";  // sgd | beta-lasso
  double lr = 0.1;
  double lambda_conv = 0.0;
  double lambda_fc = 0.0;
  double beta = 0.0;
  double momentum = 0.0;
  double weight_decay = 0.0;

  // loop
  std::uint64_t epochs = 10;
  std::uint64_t batch_size = 128;
  std::uint64_t seed = 0;
  bool exact_sums = false;
  std::string out_dir = "run";

  void set(const std::string& key, const std::string& value);
  OptimizerConfig optimizer_config(std::uint64_t total_steps) const;
  ArchSpec arch_spec(std::uint32_t image_size, std::uint32_t in_channels, std::uint32_t classes) const;
};

namespace cfg_detail {

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("config: boolean expected for '" + key + "', got '" + v + "'");
}

inline double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: number expected for '" + key + "', got '" + v + "'");
  }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    unsigned long long u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw ConfigError("config: unsigned integer expected for '" + key + "', got '" + v + "'");
  }
}

}  // namespace cfg_detail

inline void RunConfig::set(const std::string& key, const std::string& value) {
  using namespace cfg_detail;
  if (key == "arch") arch = value;
  else if (key == "alpha") alpha = static_cast<std::uint32_t>(parse_uint(key, value));
  else if (key == "hidden") hidden = static_cast<std::uint32_t>(parse_uint(key, value));
  else if (key == "dropout") dropout = value;
  else if (key == "dropout_rate") dropout_rate = parse_real(key, value);
  else if (key == "dataset") dataset = value;
  else if (key == "data_dir") data_dir = value;
  else if (key == "val_fraction") val_fraction = parse_real(key, value);
  else if (key == "augment") augment = parse_bool(key, value);
  else if (key == "pad") pad = static_cast<std::uint32_t>(parse_uint(key, value));
  else if (key == "hflip") hflip = parse_bool(key, value);
  else if (key == "optimizer") optimizer = value;
  else if (key == "lr") lr = parse_real(key, value);
  else if (key == "lambda_conv") lambda_conv = parse_real(key, value);
  else if (key == "lambda_fc") lambda_fc = parse_real(key, value);
  else if (key == "beta") beta = parse_real(key, value);
  else if (key == "momentum") momentum = parse_real(key, value);
  else if (key == "weight_decay") weight_decay = parse_real(key, value);
  else if (key == "epochs") epochs = parse_uint(key, value);
  else if (key == "batch_size") batch_size = parse_uint(key, value);
  else if (key == "seed") seed = parse_uint(key, value);
  else if (key == "exact_sums") exact_sums = parse_bool(key, value);
  else if (key == "out_dir") out_dir = value;
  else throw ConfigError("config: unknown key '" + key + "'");
}

/// Flat key=value format; '#' starts a comment, blank lines are ignored.
inline void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open '" + path + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: '" + path + "' line " + std::to_string(lineno) + ": expected key=value");
    cfg.set(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
  }
}

inline OptimizerConfig RunConfig::optimizer_config(std::uint64_t total_steps) const {
  OptimizerConfig oc;
  oc.algorithm = algorithm_from_name(optimizer);
  oc.eta0 = lr;
  oc.lambda_conv = lambda_conv;
  oc.lambda_fc = lambda_fc;
  oc.beta = beta;
  oc.momentum = momentum;
  oc.weight_decay = weight_decay;
  oc.total_steps = total_steps < 1 ? 1 : total_steps;
  oc.validate();
  return oc;
}

inline ArchSpec RunConfig::arch_spec(std::uint32_t image_size, std::uint32_t in_channels,
                                     std::uint32_t classes) const {
  ArchSpec a;
  a.family = family_from_name(arch);
  a.alpha = alpha;
  a.hidden = hidden;
  a.image_size = image_size;
  a.in_channels = in_channels;
  a.num_classes = classes;
  if (dropout == "none") a.dropout = DropoutPlacement::None;
  else if (dropout == "last_two") a.dropout = DropoutPlacement::LastTwo;
  else throw ConfigError("config: dropout must be 'none' or 'last_two'");
  a.dropout_rate = dropout_rate;
  a.validate();
  return a;
}

}  // namespace sclb
