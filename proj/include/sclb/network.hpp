#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sclb/layers.hpp"

namespace sclb {

/// Ordered layer chain with a named parameter registry. Single-threaded
/// during a forward/backward pass; distinct instances are independent.
template <typename T>
class Network {
 public:
  Network() = default;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;

  void add(std::unique_ptr<Layer<T>> layer) { layers_.push_back(std::move(layer)); }

  std::vector<std::unique_ptr<Layer<T>>>& layers() { return layers_; }
  const std::vector<std::unique_ptr<Layer<T>>>& layers() const { return layers_; }

  Mode mode() const { return mode_; }
  void set_mode(Mode m) { mode_ = m; }

  /// Input geometry [C,H,W]; set by the builder, used by analytics.
  void set_input_shape(std::vector<std::size_t> s) { input_shape_ = std::move(s); }
  const std::vector<std::size_t>& input_shape() const { return input_shape_; }

  RandomEngine& dropout_rng() { return dropout_rng_; }

  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> h = x;
    for (auto& l : layers_) h = l->forward(h, mode_);
    forwarded_ = true;
    return h;
  }

  /// Reverse pass over the recorded composition; populates every
  /// Parameter::grad. One backward per forward.
  void backward(const Tensor<T>& loss_grad) {
    if (!forwarded_) throw ConfigError("network: backward called before forward");
    Tensor<T> g = loss_grad;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    forwarded_ = false;
  }

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> out;
    for (auto& l : layers_)
      for (Parameter<T>* p : l->params()) out.push_back(p);
    return out;
  }

  Parameter<T>* find_parameter(const std::string& name) {
    for (auto& l : layers_)
      for (Parameter<T>* p : l->params())
        if (p->name == name) return p;
    return nullptr;
  }

  std::vector<std::pair<std::string, Tensor<T>*>> buffers() {
    std::vector<std::pair<std::string, Tensor<T>*>> out;
    for (auto& l : layers_)
      for (auto& b : l->buffers()) out.push_back(b);
    return out;
  }

  void zero_grad() {
    for (Parameter<T>* p : parameters()) p->grad.fill(T(0));
  }

  /// Total weight slots (kernels and weight matrices only).
  std::size_t weight_slot_count() {
    std::size_t n = 0;
    for (Parameter<T>* p : parameters())
      if (p->counts_as_weight) n += p->value.size();
    return n;
  }

  std::size_t weight_nonzero_count() {
    std::size_t n = 0;
    for (Parameter<T>* p : parameters())
      if (p->counts_as_weight) n += p->value.count_nonzero();
    return n;
  }

  /// Switches every dense layer to order-invariant inner products.
  void set_exact_sums(bool on) {
    for (auto& l : layers_)
      if (l->kind() == LayerKind::Fc) static_cast<FcLayer<T>*>(l.get())->exact_sums = on;
  }

  /// Marks the first parameterized layer to skip input-gradient work.
  void finalize() {
    for (auto& l : layers_) {
      if (l->kind() == LayerKind::Fc || l->kind() == LayerKind::Conv2D || l->kind() == LayerKind::Local2D) {
        l->need_input_grad = false;
        break;
      }
    }
  }

  /// Validates shape compatibility of the whole chain for a batch of one.
  std::vector<std::size_t> check_shapes() const {
    std::vector<std::size_t> shape;
    shape.push_back(1);
    for (std::size_t d : input_shape_) shape.push_back(d);
    for (const auto& l : layers_) shape = l->output_shape(shape);
    return shape;
  }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  Mode mode_ = Mode::Train;
  bool forwarded_ = false;
  std::vector<std::size_t> input_shape_;
  RandomEngine dropout_rng_;
};

}  // namespace sclb
