// Writes the bundled synthetic digit set as MNIST-format IDX files, for
// running the bench without a local copy of the real dataset.

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "sclb/data.hpp"
#include "sclb/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate a synthetic digit dataset in MNIST IDX format"};
  std::string out = "data/synth";
  std::size_t n_train = 60000, n_test = 10000;
  std::uint64_t seed = 7;
  app.add_option("--out", out, "output directory");
  app.add_option("--train", n_train, "training images");
  app.add_option("--test", n_test, "test images");
  app.add_option("--seed", seed, "generator seed");
  CLI11_PARSE(app, argc, argv);

  try {
    auto [train, test] = sclb::make_synth_splits(n_train, n_test, seed);
    sclb::write_mnist(out, train, test);
    std::printf("wrote %zu train / %zu test images to %s\n", train.count, test.count, out.c_str());
  } catch (const sclb::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
