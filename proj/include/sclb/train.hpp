#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sclb/analytics.hpp"
#include "sclb/checkpoint.hpp"
#include "sclb/config.hpp"
#include "sclb/data.hpp"
#include "sclb/loss.hpp"

namespace sclb {

struct MetricsRecord {
  std::uint64_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  double lr = 0.0;  // learning rate of the last step in the epoch
  std::vector<std::uint64_t> per_layer_nnz;
  double wall_seconds = 0.0;
};

inline std::string format_metrics_header() {
  return "epoch,train_loss,train_acc,val_acc,test_acc,lr,nnz";
}

/// One self-delimiting record per line; the per-layer nonzeros are
/// semicolon-joined inside the final column. Wall time goes to a separate
/// timing file so the metrics stream is reproducible byte for byte.
inline std::string format_metrics_record(const MetricsRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%llu,%.9g,%.9g,%.9g,%.9g,%.9g,",
                static_cast<unsigned long long>(r.epoch), r.train_loss, r.train_acc, r.val_acc,
                r.test_acc, r.lr);
  std::string line(buf);
  for (std::size_t i = 0; i < r.per_layer_nnz.size(); ++i) {
    if (i) line += ";";
    line += std::to_string(r.per_layer_nnz[i]);
  }
  return line;
}

struct TrainResult {
  std::vector<MetricsRecord> records;
  std::vector<double> step_losses;  // per optimizer step
  double best_val_acc = 0.0;
  std::string best_checkpoint, final_checkpoint, initial_checkpoint;
};

/// Eval-mode accuracy (and mean loss) over a full dataset.
template <typename T>
std::pair<double, double> evaluate(Network<T>& net, const Dataset& ds, std::uint64_t batch_size) {
  const Mode saved = net.mode();
  net.set_mode(Mode::Eval);
  std::size_t correct = 0;
  double loss_sum = 0.0;
  AugmentConfig no_aug;
  for (std::size_t start = 0; start < ds.count; start += batch_size) {
    const std::size_t n = std::min<std::size_t>(batch_size, ds.count - start);
    std::vector<std::uint32_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(start + i);
    Tensor<T> x = make_batch<T>(ds, idx, no_aug, 0);
    const auto labels = labels_for(ds, idx);
    Tensor<T> logits = net.forward(x);
    auto [loss, grad] = softmax_xent(logits, labels);
    (void)grad;
    loss_sum += loss * static_cast<double>(n);
    correct += count_correct(logits, labels);
  }
  net.set_mode(saved);
  return {static_cast<double>(correct) / static_cast<double>(ds.count),
          loss_sum / static_cast<double>(ds.count)};
}

/// Full training run: per-epoch seeded shuffle, per-step cosine schedule,
/// chosen optimizer; one metrics record per epoch; best-validation and final
/// checkpoints. Throws NumericError on a non-finite loss or gradient; the
/// newest epoch checkpoint stays on disk.
inline TrainResult train_run(const RunConfig& cfg, const Dataset& train_in, const Dataset& test_in,
                             const std::function<void(const MetricsRecord&)>& on_record = {}) {
  namespace fs = std::filesystem;
  if (train_in.height != train_in.width) throw ConfigError("train: images must be square");

  Dataset test = test_in;
  auto [train, val] = split_train_val(train_in, cfg.val_fraction, cfg.seed);
  compute_channel_stats(train);
  copy_channel_stats(train, val);
  copy_channel_stats(train, test);

  const ArchSpec arch = cfg.arch_spec(static_cast<std::uint32_t>(train.height),
                                      static_cast<std::uint32_t>(train.channels), train.num_classes);
  const std::uint64_t steps_per_epoch = (train.count + cfg.batch_size - 1) / cfg.batch_size;
  const std::uint64_t total_steps = cfg.epochs * steps_per_epoch;
  const OptimizerConfig opt = cfg.optimizer_config(total_steps);

  Network<float> net = build<float>(arch, cfg.seed);
  net.set_exact_sums(cfg.exact_sums);
  net.dropout_rng() = RandomEngine(mix_seed(cfg.seed, 0x64726f70ULL));
  RandomEngine shuffle_rng(mix_seed(cfg.seed, 0x73687566ULL));
  OptimizerState<float> state;

  fs::create_directories(cfg.out_dir);
  TrainResult result;
  auto rng_map = [&]() {
    return std::map<std::string, std::string>{{"dropout", net.dropout_rng().save_state()},
                                              {"shuffle", shuffle_rng.save_state()}};
  };
  auto save = [&](const std::string& name) {
    const std::string path = cfg.out_dir + "/" + name;
    save_checkpoint(path, net, arch, cfg.exact_sums, opt, state, rng_map(), train.channel_mean,
                    train.channel_std);
    return path;
  };
  result.initial_checkpoint = save("initial.sclb");
  if (cfg.epochs == 0) return result;

  const AugmentConfig aug{cfg.pad, cfg.hflip, cfg.augment};
  std::vector<std::uint32_t> order(train.count);
  for (std::size_t i = 0; i < train.count; ++i) order[i] = static_cast<std::uint32_t>(i);

  for (std::uint64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    net.set_mode(Mode::Train);
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    double last_lr = 0.0;
    for (std::uint64_t b = 0; b < steps_per_epoch; ++b) {
      const std::size_t lo = b * cfg.batch_size;
      const std::size_t hi = std::min<std::size_t>(lo + cfg.batch_size, train.count);
      std::vector<std::uint32_t> idx(order.begin() + lo, order.begin() + hi);
      Tensor<float> x = make_batch<float>(train, idx, aug, mix_seed(cfg.seed, 0x61756700ULL + state.step));
      const auto labels = labels_for(train, idx);
      Tensor<float> logits = net.forward(x);
      auto [loss, grad] = softmax_xent(logits, labels);
      if (!std::isfinite(loss))
        throw NumericError("train: non-finite loss at step " + std::to_string(state.step));
      loss_sum += loss * static_cast<double>(idx.size());
      correct += count_correct(logits, labels);
      net.backward(grad);
      last_lr = cosine_lr(state.step, opt.total_steps, opt.eta0);
      optimizer_step(net, opt, state);
      result.step_losses.push_back(loss);
    }

    MetricsRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train.count);
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(train.count);
    rec.val_acc = val.count ? evaluate(net, val, cfg.batch_size).first : 0.0;
    rec.test_acc = test.count ? evaluate(net, test, cfg.batch_size).first : 0.0;
    rec.lr = last_lr;
    for (const auto& row : nnz_report(net).per_layer) rec.per_layer_nnz.push_back(row.nonzero);
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    result.final_checkpoint = save("final.sclb");
    if (rec.val_acc > result.best_val_acc || result.best_checkpoint.empty()) {
      result.best_val_acc = rec.val_acc;
      result.best_checkpoint = save("best.sclb");
    }
    result.records.push_back(rec);
    if (on_record) on_record(rec);
  }
  return result;
}

/// Loads the dataset pair named by the config; synth is the bundled
/// procedurally generated stand-in (written/read through the MNIST format
/// when materialized on disk by the datagen tool).
inline std::pair<Dataset, Dataset> load_dataset(const RunConfig& cfg) {
  if (cfg.dataset == "mnist") return load_mnist(cfg.data_dir);
  if (cfg.dataset == "cifar10") return load_cifar10(cfg.data_dir);
  if (cfg.dataset == "cifar100") return load_cifar100(cfg.data_dir);
  throw ConfigError("config: unknown dataset '" + cfg.dataset + "' (mnist, cifar10, cifar100)");
}

}  // namespace sclb
