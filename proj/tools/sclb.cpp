// sclb command-line driver: train, eval, analyze, sweep, mdl-bound.
//
// Exit codes: 0 success, 1 configuration error, 2 numerical abort.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sclb/sclb.hpp"

namespace fs = std::filesystem;
using namespace sclb;

namespace {

struct TrainFlags {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
};

void add_override_options(CLI::App* cmd, TrainFlags& tf) {
  cmd->add_option("--config", tf.config_path, "key=value config file");
  // Every RunConfig key doubles as a flag; flags override file values.
  static const char* keys[] = {"arch", "alpha", "hidden", "dropout", "dropout_rate",
                               "dataset", "data_dir", "val_fraction", "augment", "pad",
                               "hflip", "optimizer", "lr", "lambda_conv", "lambda_fc",
                               "beta", "momentum", "weight_decay", "epochs", "batch_size",
                               "seed", "exact_sums", "out_dir"};
  for (const char* key : keys) {
    std::string k = key;
    cmd->add_option_function<std::string>(
        "--" + k, [&tf, k](const std::string& v) { tf.overrides.emplace_back(k, v); },
        "config key '" + k + "'");
  }
}

RunConfig resolve_config(const TrainFlags& tf) {
  RunConfig cfg;
  if (!tf.config_path.empty()) load_config_file(cfg, tf.config_path);
  for (const auto& [k, v] : tf.overrides) cfg.set(k, v);
  return cfg;
}

void write_effective_config(const RunConfig& c, const std::string& path) {
  std::ofstream f(path);
  char buf[64];
  auto real = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  f << "arch=" << c.arch << "\nalpha=" << c.alpha << "\nhidden=" << c.hidden
    << "\ndropout=" << c.dropout << "\ndropout_rate=" << real(c.dropout_rate)
    << "\ndataset=" << c.dataset << "\ndata_dir=" << c.data_dir
    << "\nval_fraction=" << real(c.val_fraction) << "\naugment=" << (c.augment ? 1 : 0)
    << "\npad=" << c.pad << "\nhflip=" << (c.hflip ? 1 : 0) << "\noptimizer=" << c.optimizer
    << "\nlr=" << real(c.lr) << "\nlambda_conv=" << real(c.lambda_conv)
    << "\nlambda_fc=" << real(c.lambda_fc) << "\nbeta=" << real(c.beta)
    << "\nmomentum=" << real(c.momentum) << "\nweight_decay=" << real(c.weight_decay)
    << "\nepochs=" << c.epochs << "\nbatch_size=" << c.batch_size << "\nseed=" << c.seed
    << "\nexact_sums=" << (c.exact_sums ? 1 : 0) << "\nout_dir=" << c.out_dir << "\n";
}

int cmd_train(const TrainFlags& tf) {
  RunConfig cfg = resolve_config(tf);
  auto [train_ds, test_ds] = load_dataset(cfg);
  fs::create_directories(cfg.out_dir);
  write_effective_config(cfg, cfg.out_dir + "/config.txt");

  std::ofstream metrics(cfg.out_dir + "/metrics.csv");
  std::ofstream timing(cfg.out_dir + "/timing.csv");
  metrics << format_metrics_header() << "\n" << std::flush;
  timing << "epoch,wall_seconds\n" << std::flush;

  TrainResult res = train_run(cfg, train_ds, test_ds, [&](const MetricsRecord& r) {
    metrics << format_metrics_record(r) << "\n" << std::flush;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", r.wall_seconds);
    timing << r.epoch << "," << buf << "\n" << std::flush;
    std::printf("epoch %llu  loss %.4f  train %.4f  val %.4f  test %.4f  lr %.5f  (%.1fs)\n",
                static_cast<unsigned long long>(r.epoch), r.train_loss, r.train_acc, r.val_acc,
                r.test_acc, r.lr, r.wall_seconds);
    std::fflush(stdout);
  });
  std::printf("checkpoints: %s", res.initial_checkpoint.c_str());
  if (!res.final_checkpoint.empty())
    std::printf(", %s, %s", res.best_checkpoint.c_str(), res.final_checkpoint.c_str());
  std::printf("\n");
  return 0;
}

Dataset load_eval_split(const Checkpoint& c, const std::string& dataset, const std::string& data_dir,
                        const std::string& split) {
  RunConfig dc;
  dc.dataset = dataset;
  dc.data_dir = data_dir;
  auto [train_ds, test_ds] = load_dataset(dc);
  Dataset ds = (split == "train") ? std::move(train_ds) : std::move(test_ds);
  if (ds.height != c.arch.image_size || ds.channels != c.arch.in_channels ||
      ds.num_classes != c.arch.num_classes)
    throw ConfigError("eval: dataset geometry does not match the checkpoint architecture");
  if (c.channel_mean.empty()) throw ConfigError("eval: checkpoint carries no standardization stats");
  ds.channel_mean = c.channel_mean;
  ds.channel_std = c.channel_std;
  return ds;
}

int cmd_eval(const std::string& ckpt_path, const std::string& dataset, const std::string& data_dir,
             const std::string& split, std::uint64_t batch_size) {
  Checkpoint c = load_checkpoint(ckpt_path);
  Dataset ds = load_eval_split(c, dataset, data_dir, split);
  auto [acc, loss] = evaluate(c.net, ds, batch_size);
  std::printf("split %s  examples %zu  accuracy %.6f  loss %.6f\n", split.c_str(), ds.count, acc, loss);
  return 0;
}

int cmd_analyze(const std::string& ckpt_path, const std::string& out_dir, std::uint64_t min_nnz,
                std::uint64_t max_filters, std::uint64_t seed, std::uint64_t m, double delta,
                std::uint64_t bits, double train_loss, const std::string& base_name) {
  Checkpoint c = load_checkpoint(ckpt_path);
  fs::create_directories(out_dir);

  SparsityReport rep = nnz_report(c.net);
  write_sparsity_csv(out_dir + "/sparsity.csv", rep);

  const std::string first = c.net.layers().front()->kind() == LayerKind::Flatten
                                ? c.net.layers()[1]->name()
                                : c.net.layers().front()->name();
  auto filters = extract_filters(c.net, first, min_nnz, max_filters, seed);
  fs::create_directories(out_dir + "/filters");
  for (const auto& f : filters) {
    const std::string ext = f.channels == 3 ? ".ppm" : ".pgm";
    write_filter_image(out_dir + "/filters/" + first + "_u" + std::to_string(f.unit) + ext, f);
  }
  write_filters_csv(out_dir + "/filters.csv", filters);

  const LogBase base = base_name == "nats" ? LogBase::Nats : LogBase::Bits;
  BoundReport b = network_bound_report(c.net, m, delta, bits, train_loss, base);
  std::printf("layer sparsity -> %s/sparsity.csv, %zu filters (min_nnz=%llu) -> %s/filters\n",
              out_dir.c_str(), filters.size(), static_cast<unsigned long long>(min_nnz), out_dir.c_str());
  std::printf("%-12s %-12s %-6s %-12s %-12s %-10s %-10s\n", "n", "k", "b", "nnz", "desc_len", "gap", "bound");
  std::printf("%-12llu %-12llu %-6llu %-12llu %-12llu %-10.5f %-10.5f\n",
              static_cast<unsigned long long>(b.n), static_cast<unsigned long long>(b.k),
              static_cast<unsigned long long>(b.b), static_cast<unsigned long long>(b.nnz),
              static_cast<unsigned long long>(b.desc_len), b.gap, b.bound);
  std::printf("log base: %s\n", base == LogBase::Bits ? "2 (bits)" : "e (nats)");
  return 0;
}

int cmd_sweep(const TrainFlags& tf, const std::string& sizes_csv, double target_acc) {
  RunConfig base = resolve_config(tf);
  std::vector<std::uint32_t> sizes;
  std::stringstream ss(sizes_csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) sizes.push_back(static_cast<std::uint32_t>(cfg_detail::parse_uint("sizes", item)));
  if (sizes.empty()) throw ConfigError("sweep: no sizes given");

  auto [train_ds, test_ds] = load_dataset(base);
  fs::create_directories(base.out_dir);
  std::ofstream table(base.out_dir + "/sweep.csv");
  table << "size,params,epochs_to_target,best_train_acc\n";

  const bool three_fc = base.arch == "3-fc";
  std::printf("%-8s %-14s %-18s %-14s\n", three_fc ? "hidden" : "alpha", "params", "epochs_to_target", "best_train_acc");
  for (std::uint32_t size : sizes) {
    RunConfig cfg = base;
    if (three_fc)
      cfg.hidden = size;
    else
      cfg.alpha = size;
    cfg.out_dir = base.out_dir + "/size_" + std::to_string(size);
    ArchSpec a = cfg.arch_spec(static_cast<std::uint32_t>(train_ds.height),
                               static_cast<std::uint32_t>(train_ds.channels), train_ds.num_classes);
    const std::uint64_t params = param_count(a);
    std::uint64_t reached = 0;
    double best = 0.0;
    TrainResult res = train_run(cfg, train_ds, test_ds, [&](const MetricsRecord& r) {
      best = std::max(best, r.train_acc);
      if (reached == 0 && r.train_acc >= target_acc) reached = r.epoch;
    });
    (void)res;
    const std::string when = reached ? std::to_string(reached) : "FAIL";
    std::printf("%-8u %-14llu %-18s %-14.4f\n", size, static_cast<unsigned long long>(params),
                when.c_str(), best);
    std::fflush(stdout);
    table << size << "," << params << "," << when << "," << best << "\n" << std::flush;
  }
  return 0;
}

int cmd_mdl_bound(std::uint64_t n, std::uint64_t k, std::uint64_t bits, std::uint64_t nnz,
                  std::uint64_t m, double delta, double train_loss, const std::string& base_name) {
  const LogBase base = base_name == "nats" ? LogBase::Nats : LogBase::Bits;
  BoundInput in;
  in.train_loss = train_loss;
  in.sample_count = m;
  in.delta = delta;
  in.max_params = n;
  in.distinct_values = k;
  in.bits_per_param = bits;
  in.nonzero_count = nnz;
  const double bound = bound_theorem2(in, base);
  const std::uint64_t dg = sharing_desc_len(n, k, nnz);
  std::printf("%-12s %-12s %-6s %-12s %-12s %-10s %-10s\n", "n", "k", "b", "nnz", "desc_len", "gap", "bound");
  std::printf("%-12llu %-12llu %-6llu %-12llu %-12llu %-10.5f %-10.5f\n",
              static_cast<unsigned long long>(n), static_cast<unsigned long long>(k),
              static_cast<unsigned long long>(bits), static_cast<unsigned long long>(nnz),
              static_cast<unsigned long long>(dg), bound - train_loss, bound);
  std::printf("log base: %s\n", base == LogBase::Bits ? "2 (bits)" : "e (nats)");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"training and analysis bench for conv/local/fc architectures"};
  app.require_subcommand(1);

  TrainFlags train_flags;
  CLI::App* train = app.add_subcommand("train", "train a model from a run config");
  add_override_options(train, train_flags);

  std::string ckpt, dataset = "mnist", data_dir = "data", split = "test";
  std::uint64_t batch_size = 256;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
  eval->add_option("--checkpoint", ckpt, "checkpoint file")->required();
  eval->add_option("--dataset", dataset, "mnist | cifar10 | cifar100");
  eval->add_option("--data_dir", data_dir, "dataset directory");
  eval->add_option("--split", split, "train | test");
  eval->add_option("--batch_size", batch_size, "eval batch size");

  std::string an_ckpt, an_out = "analysis", an_base = "bits";
  std::uint64_t an_min_nnz = 0, an_max_filters = 64, an_seed = 0, an_m = 50000, an_b = 32;
  double an_delta = 0.05, an_train_loss = 0.0;
  CLI::App* analyze = app.add_subcommand("analyze", "sparsity report, filter export, generalization bound");
  analyze->add_option("--checkpoint", an_ckpt, "checkpoint file")->required();
  analyze->add_option("--out", an_out, "output directory");
  analyze->add_option("--min_nnz", an_min_nnz, "minimum nonzeros for an exported filter");
  analyze->add_option("--max_filters", an_max_filters, "cap on exported filters (seeded sample)");
  analyze->add_option("--seed", an_seed, "filter sampling seed");
  analyze->add_option("--m", an_m, "sample count for the bound");
  analyze->add_option("--delta", an_delta, "confidence for the bound");
  analyze->add_option("--bits", an_b, "bits per parameter");
  analyze->add_option("--train_loss", an_train_loss, "empirical 0-1 training loss");
  analyze->add_option("--base", an_base, "bits | nats");

  TrainFlags sweep_flags;
  std::string sweep_sizes;
  double sweep_target = 0.99;
  CLI::App* sweep = app.add_subcommand("sweep", "train a size ladder, report epochs to a target train accuracy");
  add_override_options(sweep, sweep_flags);
  sweep->add_option("--sizes", sweep_sizes, "comma-separated alphas (or hidden widths for 3-fc)")->required();
  sweep->add_option("--target_acc", sweep_target, "target train accuracy");

  std::uint64_t mb_n = 0, mb_k = 0, mb_b = 32, mb_nnz = 0, mb_m = 50000;
  double mb_delta = 0.05, mb_loss = 0.0;
  std::string mb_base = "bits";
  CLI::App* mdlb = app.add_subcommand("mdl-bound", "evaluate the sparse description-length bound");
  mdlb->add_option("--n", mb_n, "maximum parameter slots")->required();
  mdlb->add_option("--k", mb_k, "distinct parameter values")->required();
  mdlb->add_option("--bits", mb_b, "bits per parameter");
  mdlb->add_option("--nnz", mb_nnz, "nonzero parameters")->required();
  mdlb->add_option("--m", mb_m, "sample count");
  mdlb->add_option("--delta", mb_delta, "confidence");
  mdlb->add_option("--train_loss", mb_loss, "empirical 0-1 training loss");
  mdlb->add_option("--base", mb_base, "bits | nats");

  try {
    app.parse(argc, argv);
    if (train->parsed()) return cmd_train(train_flags);
    if (eval->parsed()) return cmd_eval(ckpt, dataset, data_dir, split, batch_size);
    if (analyze->parsed())
      return cmd_analyze(an_ckpt, an_out, an_min_nnz, an_max_filters, an_seed, an_m, an_delta, an_b,
                         an_train_loss, an_base);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, sweep_sizes, sweep_target);
    if (mdlb->parsed()) return cmd_mdl_bound(mb_n, mb_k, mb_b, mb_nnz, mb_m, mb_delta, mb_loss, mb_base);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical abort: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
