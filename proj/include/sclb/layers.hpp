#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sclb/common.hpp"
#include "sclb/dense_math.hpp"
#include "sclb/rng.hpp"
#include "sclb/tensor.hpp"

namespace sclb {

enum class LayerKind { Fc, Conv2D, Local2D, BatchNorm, ReLU, Dropout, Flatten };

/// Named learnable tensor with its gradient and regularization group.
/// counts_as_weight marks the tensors included in weight-slot accounting
/// (kernels and weight matrices; biases and batch-norm affine are excluded).
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  ParamGroup group = ParamGroup::NormBias;
  bool counts_as_weight = false;

  Parameter(std::string n, Tensor<T> v, ParamGroup g, bool weight)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()), group(g), counts_as_weight(weight) {}
};

template <typename T>
class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;

  const std::string& name() const { return name_; }
  virtual LayerKind kind() const = 0;

  virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
  /// Consumes the cached forward pass; fills parameter grads, returns dL/dx.
  virtual Tensor<T> backward(const Tensor<T>& dy) = 0;

  virtual std::vector<Parameter<T>*> params() { return {}; }
  /// Non-learnable persistent state (batch-norm running statistics).
  virtual std::vector<std::pair<std::string, Tensor<T>*>> buffers() { return {}; }
  virtual std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const = 0;

  /// The first layer of a network skips input-gradient computation.
  bool need_input_grad = true;

 protected:
  std::string name_;
};

// ---------------------------------------------------------------------------
// Fully connected: y[n,o] = b[o] + sum_i W[o,i] * x[n,i]

template <typename T>
class FcLayer final : public Layer<T> {
 public:
  FcLayer(std::string name, std::size_t in_features, std::size_t out_features, ParamGroup weight_group)
      : Layer<T>(std::move(name)),
        in_(in_features),
        out_(out_features),
        weight_(this->name_ + ".weight", Tensor<T>({out_features, in_features}), weight_group, true),
        bias_(this->name_ + ".bias", Tensor<T>({out_features}), ParamGroup::NormBias, false) {}

  LayerKind kind() const override { return LayerKind::Fc; }
  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

  /// Order-invariant (commutative) inner products; see dense_math.hpp.
  bool exact_sums = false;

  Tensor<T> forward(const Tensor<T>& x, Mode) override {
    check_input(x);
    const std::size_t n_batch = x.dim(0);
    Tensor<T> y({n_batch, out_});
    const T* w = weight_.value.data();
    const T* b = bias_.value.data();
    for (std::size_t o = 0; o < out_; ++o) {
      const T* wrow = w + o * in_;
      for (std::size_t n = 0; n < n_batch; ++n) {
        const T* xrow = x.data() + n * in_;
        T s = exact_sums ? dot_commutative(wrow, xrow, in_) : dot(wrow, xrow, in_);
        y[n * out_ + o] = b[o] + s;
      }
    }
    x_cache_ = x;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const std::size_t n_batch = x_cache_.dim(0);
    if (dy.rank() != 2 || dy.dim(0) != n_batch || dy.dim(1) != out_)
      throw ConfigError(this->name_ + ": bad upstream gradient shape " + shape_to_string(dy.shape()));
    weight_.grad.fill(T(0));
    bias_.grad.fill(T(0));
    T* dw = weight_.grad.data();
    T* db = bias_.grad.data();
    const T* x = x_cache_.data();
    for (std::size_t o = 0; o < out_; ++o) {
      T* dwrow = dw + o * in_;
      T acc_b = T(0);
      for (std::size_t n = 0; n < n_batch; ++n) {
        const T g = dy[n * out_ + o];
        acc_b += g;
        if (g != T(0)) axpy(dwrow, g, x + n * in_, in_);
      }
      db[o] = acc_b;
    }
    Tensor<T> dx;
    if (this->need_input_grad) {
      dx = Tensor<T>({n_batch, in_});
      const T* w = weight_.value.data();
      for (std::size_t o = 0; o < out_; ++o) {
        const T* wrow = w + o * in_;
        for (std::size_t n = 0; n < n_batch; ++n) {
          const T g = dy[n * out_ + o];
          if (g != T(0)) axpy(dx.data() + n * in_, g, wrow, in_);
        }
      }
    } else {
      dx = Tensor<T>({n_batch, in_});
    }
    return dx;
  }

  std::vector<Parameter<T>*> params() override { return {&weight_, &bias_}; }

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
    if (in.size() != 2 || in[1] != in_)
      throw ConfigError(this->name_ + ": expects [N," + std::to_string(in_) + "], got " + shape_to_string(in));
    return {in[0], out_};
  }

 private:
  void check_input(const Tensor<T>& x) const {
    if (x.rank() != 2 || x.dim(1) != in_)
      throw ConfigError(this->name_ + ": expects [N," + std::to_string(in_) + "], got " + shape_to_string(x.shape()));
  }

  std::size_t in_, out_;
  Parameter<T> weight_, bias_;
  Tensor<T> x_cache_;
};

// ---------------------------------------------------------------------------
// 2-D convolution, cross-correlation convention (no kernel flip).

inline std::size_t conv_out_size(std::size_t s, std::size_t k, std::size_t stride, std::size_t pad) {
  if (k < 1 || stride < 1) throw ConfigError("conv: kernel and stride must be >= 1");
  if (s + 2 * pad < k) throw ConfigError("conv: kernel larger than padded input");
  std::size_t out = (s + 2 * pad - k) / stride + 1;
  if (out < 1) throw ConfigError("conv: empty output");
  return out;
}

template <typename T>
class Conv2dLayer final : public Layer<T> {
 public:
  Conv2dLayer(std::string name, std::size_t c_in, std::size_t c_out, std::size_t k,
              std::size_t stride, std::size_t pad, ParamGroup weight_group)
      : Layer<T>(std::move(name)),
        cin_(c_in), cout_(c_out), k_(k), stride_(stride), pad_(pad),
        weight_(this->name_ + ".weight", Tensor<T>({c_out, c_in, k, k}), weight_group, true),
        bias_(this->name_ + ".bias", Tensor<T>({c_out}), ParamGroup::NormBias, false) {}

  LayerKind kind() const override { return LayerKind::Conv2D; }
  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }
  std::size_t kernel() const { return k_; }
  std::size_t stride() const { return stride_; }
  std::size_t pad() const { return pad_; }

  Tensor<T> forward(const Tensor<T>& x, Mode) override {
    check_input(x);
    const std::size_t n_batch = x.dim(0), h = x.dim(2), w = x.dim(3);
    const std::size_t ho = conv_out_size(h, k_, stride_, pad_), wo = conv_out_size(w, k_, stride_, pad_);
    Tensor<T> y({n_batch, cout_, ho, wo});
    const T* kw = weight_.value.data();
    for (std::size_t n = 0; n < n_batch; ++n)
      for (std::size_t co = 0; co < cout_; ++co)
        for (std::size_t i = 0; i < ho; ++i)
          for (std::size_t j = 0; j < wo; ++j) {
            T acc = bias_.value[co];
            for (std::size_t ci = 0; ci < cin_; ++ci)
              for (std::size_t u = 0; u < k_; ++u) {
                const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(i * stride_ + u) - static_cast<std::ptrdiff_t>(pad_);
                if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t v = 0; v < k_; ++v) {
                  const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(j * stride_ + v) - static_cast<std::ptrdiff_t>(pad_);
                  if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(w)) continue;
                  acc += kw[((co * cin_ + ci) * k_ + u) * k_ + v] *
                         x[((n * cin_ + ci) * h + static_cast<std::size_t>(ih)) * w + static_cast<std::size_t>(iw)];
                }
              }
            y[((n * cout_ + co) * ho + i) * wo + j] = acc;
          }
    x_cache_ = x;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const std::size_t n_batch = x_cache_.dim(0), h = x_cache_.dim(2), w = x_cache_.dim(3);
    const std::size_t ho = dy.dim(2), wo = dy.dim(3);
    weight_.grad.fill(T(0));
    bias_.grad.fill(T(0));
    Tensor<T> dx({n_batch, cin_, h, w});
    T* dkw = weight_.grad.data();
    const T* kw = weight_.value.data();
    for (std::size_t n = 0; n < n_batch; ++n)
      for (std::size_t co = 0; co < cout_; ++co)
        for (std::size_t i = 0; i < ho; ++i)
          for (std::size_t j = 0; j < wo; ++j) {
            const T g = dy[((n * cout_ + co) * ho + i) * wo + j];
            if (g == T(0)) continue;
            bias_.grad[co] += g;
            for (std::size_t ci = 0; ci < cin_; ++ci)
              for (std::size_t u = 0; u < k_; ++u) {
                const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(i * stride_ + u) - static_cast<std::ptrdiff_t>(pad_);
                if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t v = 0; v < k_; ++v) {
                  const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(j * stride_ + v) - static_cast<std::ptrdiff_t>(pad_);
                  if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(w)) continue;
                  const std::size_t xi = ((n * cin_ + ci) * h + static_cast<std::size_t>(ih)) * w + static_cast<std::size_t>(iw);
                  const std::size_t ki = ((co * cin_ + ci) * k_ + u) * k_ + v;
                  dkw[ki] += g * x_cache_[xi];
                  if (this->need_input_grad) dx[xi] += g * kw[ki];
                }
              }
          }
    return dx;
  }

  std::vector<Parameter<T>*> params() override { return {&weight_, &bias_}; }

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
    if (in.size() != 4 || in[1] != cin_)
      throw ConfigError(this->name_ + ": expects [N," + std::to_string(cin_) + ",H,W], got " + shape_to_string(in));
    return {in[0], cout_, conv_out_size(in[2], k_, stride_, pad_), conv_out_size(in[3], k_, stride_, pad_)};
  }

 private:
  void check_input(const Tensor<T>& x) const {
    if (x.rank() != 4 || x.dim(1) != cin_)
      throw ConfigError(this->name_ + ": expects [N," + std::to_string(cin_) + ",H,W], got " + shape_to_string(x.shape()));
  }

  std::size_t cin_, cout_, k_, stride_, pad_;
  Parameter<T> weight_, bias_;
  Tensor<T> x_cache_;
};

// ---------------------------------------------------------------------------
// 2-D locally connected: convolution connectivity, one kernel per output
// location. Kernel tensor [Cout, Ho, Wo, Cin, k, k]; bias [Cout, Ho, Wo].

template <typename T>
class Local2dLayer final : public Layer<T> {
 public:
  Local2dLayer(std::string name, std::size_t c_in, std::size_t c_out, std::size_t k,
               std::size_t stride, std::size_t pad, std::size_t in_h, std::size_t in_w,
               ParamGroup weight_group)
      : Layer<T>(std::move(name)),
        cin_(c_in), cout_(c_out), k_(k), stride_(stride), pad_(pad),
        in_h_(in_h), in_w_(in_w),
        ho_(conv_out_size(in_h, k, stride, pad)), wo_(conv_out_size(in_w, k, stride, pad)),
        weight_(this->name_ + ".weight", Tensor<T>({c_out, ho_, wo_, c_in, k, k}), weight_group, true),
        bias_(this->name_ + ".bias", Tensor<T>({c_out, ho_, wo_}), ParamGroup::NormBias, false) {}

  LayerKind kind() const override { return LayerKind::Local2D; }
  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }
  std::size_t kernel() const { return k_; }
  std::size_t stride() const { return stride_; }
  std::size_t pad() const { return pad_; }
  std::size_t out_h() const { return ho_; }
  std::size_t out_w() const { return wo_; }

  Tensor<T> forward(const Tensor<T>& x, Mode) override {
    check_input(x);
    const std::size_t n_batch = x.dim(0);
    Tensor<T> y({n_batch, cout_, ho_, wo_});
    const T* kw = weight_.value.data();
    for (std::size_t n = 0; n < n_batch; ++n)
      for (std::size_t co = 0; co < cout_; ++co)
        for (std::size_t i = 0; i < ho_; ++i)
          for (std::size_t j = 0; j < wo_; ++j) {
            T acc = bias_.value[(co * ho_ + i) * wo_ + j];
            const T* kloc = kw + (((co * ho_ + i) * wo_ + j) * cin_) * k_ * k_;
            for (std::size_t ci = 0; ci < cin_; ++ci)
              for (std::size_t u = 0; u < k_; ++u) {
                const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(i * stride_ + u) - static_cast<std::ptrdiff_t>(pad_);
                if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(in_h_)) continue;
                for (std::size_t v = 0; v < k_; ++v) {
                  const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(j * stride_ + v) - static_cast<std::ptrdiff_t>(pad_);
                  if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(in_w_)) continue;
                  acc += kloc[(ci * k_ + u) * k_ + v] *
                         x[((n * cin_ + ci) * in_h_ + static_cast<std::size_t>(ih)) * in_w_ + static_cast<std::size_t>(iw)];
                }
              }
            y[((n * cout_ + co) * ho_ + i) * wo_ + j] = acc;
          }
    x_cache_ = x;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const std::size_t n_batch = x_cache_.dim(0);
    weight_.grad.fill(T(0));
    bias_.grad.fill(T(0));
    Tensor<T> dx({n_batch, cin_, in_h_, in_w_});
    T* dkw = weight_.grad.data();
    const T* kw = weight_.value.data();
    for (std::size_t n = 0; n < n_batch; ++n)
      for (std::size_t co = 0; co < cout_; ++co)
        for (std::size_t i = 0; i < ho_; ++i)
          for (std::size_t j = 0; j < wo_; ++j) {
            const T g = dy[((n * cout_ + co) * ho_ + i) * wo_ + j];
            if (g == T(0)) continue;
            bias_.grad[(co * ho_ + i) * wo_ + j] += g;
            const std::size_t base = (((co * ho_ + i) * wo_ + j) * cin_) * k_ * k_;
            for (std::size_t ci = 0; ci < cin_; ++ci)
              for (std::size_t u = 0; u < k_; ++u) {
                const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(i * stride_ + u) - static_cast<std::ptrdiff_t>(pad_);
                if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(in_h_)) continue;
                for (std::size_t v = 0; v < k_; ++v) {
                  const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(j * stride_ + v) - static_cast<std::ptrdiff_t>(pad_);
                  if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(in_w_)) continue;
                  const std::size_t xi = ((n * cin_ + ci) * in_h_ + static_cast<std::size_t>(ih)) * in_w_ + static_cast<std::size_t>(iw);
                  const std::size_t ki = base + (ci * k_ + u) * k_ + v;
                  dkw[ki] += g * x_cache_[xi];
                  if (this->need_input_grad) dx[xi] += g * kw[ki];
                }
              }
          }
    return dx;
  }

  std::vector<Parameter<T>*> params() override { return {&weight_, &bias_}; }

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
    if (in.size() != 4 || in[1] != cin_ || in[2] != in_h_ || in[3] != in_w_)
      throw ConfigError(this->name_ + ": bad input shape " + shape_to_string(in));
    return {in[0], cout_, ho_, wo_};
  }

 private:
  void check_input(const Tensor<T>& x) const {
    if (x.rank() != 4 || x.dim(1) != cin_ || x.dim(2) != in_h_ || x.dim(3) != in_w_)
      throw ConfigError(this->name_ + ": bad input shape " + shape_to_string(x.shape()));
  }

  std::size_t cin_, cout_, k_, stride_, pad_, in_h_, in_w_, ho_, wo_;
  Parameter<T> weight_, bias_;
  Tensor<T> x_cache_;
};

// ---------------------------------------------------------------------------
// Batch normalization. Spatial flavor normalizes each channel over (N,H,W);
// flat flavor normalizes each unit over N. Running statistics are biased
// moments updated as running = (1-momentum)*running + momentum*batch.

template <typename T>
class BatchNormLayer final : public Layer<T> {
 public:
  enum class Flavor { Spatial, Flat };

  BatchNormLayer(std::string name, std::size_t features, Flavor flavor,
                 double eps = 1e-5, double momentum = 0.1)
      : Layer<T>(std::move(name)),
        c_(features), flavor_(flavor), eps_(eps), momentum_(momentum),
        scale_(this->name_ + ".scale", Tensor<T>({features}, T(1)), ParamGroup::NormBias, false),
        shift_(this->name_ + ".shift", Tensor<T>({features}), ParamGroup::NormBias, false),
        running_mean_({features}, T(0)),
        running_var_({features}, T(1)) {}

  LayerKind kind() const override { return LayerKind::BatchNorm; }
  Parameter<T>& scale() { return scale_; }
  Parameter<T>& shift() { return shift_; }
  Tensor<T>& running_mean() { return running_mean_; }
  Tensor<T>& running_var() { return running_var_; }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    check_input(x);
    const std::size_t n_batch = x.dim(0);
    if (n_batch == 0) throw ConfigError(this->name_ + ": empty batch");
    const std::size_t spatial = (flavor_ == Flavor::Spatial) ? x.dim(2) * x.dim(3) : 1;
    const std::size_t m = n_batch * spatial;
    Tensor<T> y(x.shape());
    mode_cache_ = mode;
    if (mode == Mode::Train) {
      inv_std_.assign(c_, 0.0);
      xhat_ = Tensor<T>(x.shape());
      for (std::size_t c = 0; c < c_; ++c) {
        double sum = 0.0;
        for_channel(x, c, [&](std::size_t idx) { sum += static_cast<double>(x[idx]); });
        const double mean = sum / static_cast<double>(m);
        double sq = 0.0;
        for_channel(x, c, [&](std::size_t idx) {
          const double d = static_cast<double>(x[idx]) - mean;
          sq += d * d;
        });
        const double var = sq / static_cast<double>(m);
        const double istd = 1.0 / std::sqrt(var + eps_);
        inv_std_[c] = istd;
        const double g = static_cast<double>(scale_.value[c]);
        const double b = static_cast<double>(shift_.value[c]);
        for_channel(x, c, [&](std::size_t idx) {
          const double xh = (static_cast<double>(x[idx]) - mean) * istd;
          xhat_[idx] = static_cast<T>(xh);
          y[idx] = static_cast<T>(g * xh + b);
        });
        running_mean_[c] = static_cast<T>((1.0 - momentum_) * static_cast<double>(running_mean_[c]) + momentum_ * mean);
        running_var_[c] = static_cast<T>((1.0 - momentum_) * static_cast<double>(running_var_[c]) + momentum_ * var);
      }
      m_cache_ = m;
    } else {
      for (std::size_t c = 0; c < c_; ++c) {
        const double istd = 1.0 / std::sqrt(static_cast<double>(running_var_[c]) + eps_);
        const double mean = static_cast<double>(running_mean_[c]);
        const double g = static_cast<double>(scale_.value[c]);
        const double b = static_cast<double>(shift_.value[c]);
        for_channel(x, c, [&](std::size_t idx) {
          y[idx] = static_cast<T>(g * (static_cast<double>(x[idx]) - mean) * istd + b);
        });
      }
    }
    shape_cache_ = x.shape();
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx(shape_cache_);
    if (mode_cache_ == Mode::Eval) {
      // Frozen affine transform.
      for (std::size_t c = 0; c < c_; ++c) {
        const double istd = 1.0 / std::sqrt(static_cast<double>(running_var_[c]) + eps_);
        const double g = static_cast<double>(scale_.value[c]) * istd;
        for_channel(dy, c, [&](std::size_t idx) { dx[idx] = static_cast<T>(g * static_cast<double>(dy[idx])); });
      }
      scale_.grad.fill(T(0));
      shift_.grad.fill(T(0));
      return dx;
    }
    const double m = static_cast<double>(m_cache_);
    for (std::size_t c = 0; c < c_; ++c) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for_channel(dy, c, [&](std::size_t idx) {
        sum_dy += static_cast<double>(dy[idx]);
        sum_dy_xhat += static_cast<double>(dy[idx]) * static_cast<double>(xhat_[idx]);
      });
      shift_.grad[c] = static_cast<T>(sum_dy);
      scale_.grad[c] = static_cast<T>(sum_dy_xhat);
      const double g = static_cast<double>(scale_.value[c]);
      const double istd = inv_std_[c];
      for_channel(dy, c, [&](std::size_t idx) {
        const double t = m * static_cast<double>(dy[idx]) - sum_dy -
                         static_cast<double>(xhat_[idx]) * sum_dy_xhat;
        dx[idx] = static_cast<T>(g * istd / m * t);
      });
    }
    return dx;
  }

  std::vector<Parameter<T>*> params() override { return {&scale_, &shift_}; }

  std::vector<std::pair<std::string, Tensor<T>*>> buffers() override {
    return {{this->name_ + ".running_mean", &running_mean_}, {this->name_ + ".running_var", &running_var_}};
  }

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
    if (flavor_ == Flavor::Spatial) {
      if (in.size() != 4 || in[1] != c_) throw ConfigError(this->name_ + ": bad input " + shape_to_string(in));
    } else {
      if (in.size() != 2 || in[1] != c_) throw ConfigError(this->name_ + ": bad input " + shape_to_string(in));
    }
    return in;
  }

 private:
  void check_input(const Tensor<T>& x) const {
    if (flavor_ == Flavor::Spatial) {
      if (x.rank() != 4 || x.dim(1) != c_)
        throw ConfigError(this->name_ + ": expects [N," + std::to_string(c_) + ",H,W], got " + shape_to_string(x.shape()));
    } else {
      if (x.rank() != 2 || x.dim(1) != c_)
        throw ConfigError(this->name_ + ": expects [N," + std::to_string(c_) + "], got " + shape_to_string(x.shape()));
    }
  }

  template <typename F>
  void for_channel(const Tensor<T>& ref, std::size_t c, F&& f) const {
    const std::size_t n_batch = ref.dim(0);
    if (flavor_ == Flavor::Flat) {
      for (std::size_t n = 0; n < n_batch; ++n) f(n * c_ + c);
    } else {
      const std::size_t spatial = ref.dim(2) * ref.dim(3);
      for (std::size_t n = 0; n < n_batch; ++n) {
        const std::size_t base = (n * c_ + c) * spatial;
        for (std::size_t s = 0; s < spatial; ++s) f(base + s);
      }
    }
  }

  std::size_t c_;
  Flavor flavor_;
  double eps_, momentum_;
  Parameter<T> scale_, shift_;
  Tensor<T> running_mean_, running_var_;
  Tensor<T> xhat_;
  std::vector<double> inv_std_;
  std::vector<std::size_t> shape_cache_;
  std::size_t m_cache_ = 0;
  Mode mode_cache_ = Mode::Train;
};

// ---------------------------------------------------------------------------

template <typename T>
class ReluLayer final : public Layer<T> {
 public:
  explicit ReluLayer(std::string name) : Layer<T>(std::move(name)) {}
  LayerKind kind() const override { return LayerKind::ReLU; }

  Tensor<T> forward(const Tensor<T>& x, Mode) override {
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
    x_cache_ = x;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = x_cache_[i] > T(0) ? dy[i] : T(0);
    return dx;
  }

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override { return in; }

 private:
  Tensor<T> x_cache_;
};

/// Inverted dropout: training scales kept activations by 1/(1-rate) so that
/// eval is the identity.
template <typename T>
class DropoutLayer final : public Layer<T> {
 public:
  DropoutLayer(std::string name, double rate, RandomEngine* rng)
      : Layer<T>(std::move(name)), rate_(rate), rng_(rng) {
    if (rate < 0.0 || rate >= 1.0) throw ConfigError(this->name_ + ": rate must be in [0,1)");
  }
  LayerKind kind() const override { return LayerKind::Dropout; }
  double rate() const { return rate_; }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    if (mode == Mode::Eval || rate_ == 0.0) {
      identity_cache_ = true;
      return x;
    }
    identity_cache_ = false;
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate_));
    mask_ = Tensor<T>(x.shape());
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const T m = rng_->bernoulli(rate_) ? T(0) : keep_scale;
      mask_[i] = m;
      y[i] = x[i] * m;
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    if (identity_cache_) return dy;
    Tensor<T> dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask_[i];
    return dx;
  }

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override { return in; }

 private:
  double rate_;
  RandomEngine* rng_;
  Tensor<T> mask_;
  bool identity_cache_ = true;
};

template <typename T>
class FlattenLayer final : public Layer<T> {
 public:
  explicit FlattenLayer(std::string name) : Layer<T>(std::move(name)) {}
  LayerKind kind() const override { return LayerKind::Flatten; }

  Tensor<T> forward(const Tensor<T>& x, Mode) override {
    in_shape_ = x.shape();
    return x.reshaped({x.dim(0), x.size() / x.dim(0)});
  }

  Tensor<T> backward(const Tensor<T>& dy) override { return dy.reshaped(in_shape_); }

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
    std::size_t f = 1;
    for (std::size_t i = 1; i < in.size(); ++i) f *= in[i];
    return {in[0], f};
  }

 private:
  std::vector<std::size_t> in_shape_;
};

}  // namespace sclb
