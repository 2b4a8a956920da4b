#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ternkit/packed.hpp"
#include "ternkit/tensor.hpp"
#include "ternkit/ternarizer.hpp"

namespace ternkit {

class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct EncoderConfig {
  std::size_t input_dim = 64;
  std::size_t hidden_dim = 64;
  std::size_t output_dim = 64;
  std::size_t num_blocks = 4;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

enum class LinearMode { full_precision, ternary };

const char* to_string(LinearMode mode);
LinearMode linear_mode_from_string(const std::string& name);

// y = x · W_effᵀ + b, with W_eff = W in full-precision mode and
// gamma · f(W | gamma) in ternary mode. gamma is recomputed from the live
// weight on every call.
struct LinearLayer {
  DenseMatrix weight;  // out × in
  std::vector<float> bias;
  LinearMode mode = LinearMode::full_precision;
  float beta = kDefaultBeta;

  static LinearLayer gaussian(std::size_t in_dim, std::size_t out_dim, Rng& rng);

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }

  float gamma() const;
  DenseMatrix effective_weight() const;
  DenseMatrix forward(const DenseMatrix& x) const;
};

struct LayerNormParams {
  std::vector<float> gain;
  std::vector<float> shift;

  explicit LayerNormParams(std::size_t dim = 0) : gain(dim, 1.0f), shift(dim, 0.0f) {}
  DenseMatrix apply(const DenseMatrix& x) const { return layer_norm(x, gain, shift); }
};

// h + fc2(gelu(fc1(layer_norm(h))))
struct EncoderBlock {
  LayerNormParams norm;
  LinearLayer fc1;
  LinearLayer fc2;
};

struct LinearGradients {
  DenseMatrix weight;
  std::vector<float> bias;
};

// Backward pass of a single layer given its forward input. Ternary layers use
// the straight-through rule, so the weight gradient is gamma * dY^T X with
// gamma held constant. Returns dL/dx.
DenseMatrix linear_backward(const LinearLayer& layer, const DenseMatrix& input,
                            const DenseMatrix& upstream, LinearGradients& grads);

struct NormGradients {
  std::vector<float> gain;
  std::vector<float> shift;
};

struct BlockGradients {
  NormGradients norm;
  LinearGradients fc1;
  LinearGradients fc2;
};

struct EncoderGradients {
  LinearGradients input;
  std::vector<BlockGradients> blocks;
  LinearGradients output;

  // Same order as EncoderModel::parameters().
  std::vector<std::span<const float>> flat() const;
};

class EncoderModel {
 public:
  // Weights ~ N(0, 1/fan_in), zero biases, unit gains, zero shifts.
  explicit EncoderModel(const EncoderConfig& config);

  const EncoderConfig& config() const { return config_; }

  bool normalize_output() const { return normalize_output_; }
  void set_normalize_output(bool on) { normalize_output_ = on; }

  // Inference; x is batch × input_dim. Safe for concurrent callers.
  DenseMatrix embed(const DenseMatrix& x) const;

  // Training forward: same result as embed() and caches activations for
  // one backward() call.
  DenseMatrix forward(const DenseMatrix& x);

  // Gradients of sum(upstream ⊙ output) for the last forward(). Ternary
  // layers use the straight-through rule: grad_W = gamma · dYᵀX, gamma
  // held constant.
  EncoderGradients backward(const DenseMatrix& upstream);

  // Switches every linear layer's mode and beta; weights are untouched.
  void replace_linears(LinearMode mode, float beta = kDefaultBeta);

  std::vector<std::span<float>> parameters();
  std::vector<std::span<const float>> parameters() const;
  std::vector<std::string> parameter_names() const;

  LinearLayer& input_layer() { return input_; }
  const LinearLayer& input_layer() const { return input_; }
  std::vector<EncoderBlock>& blocks() { return blocks_; }
  const std::vector<EncoderBlock>& blocks() const { return blocks_; }
  LinearLayer& output_layer() { return output_; }
  const LinearLayer& output_layer() const { return output_; }

  std::vector<const LinearLayer*> linear_layers() const;

 private:
  struct LinearCache {
    DenseMatrix input;
    DenseMatrix effective_weight;
    float grad_scale = 1.0f;
  };
  struct BlockCache {
    RowNormalization norm;
    LinearCache fc1;
    DenseMatrix pre_activation;
    LinearCache fc2;
  };
  struct Cache {
    LinearCache input;
    std::vector<BlockCache> blocks;
    LinearCache output;
    DenseMatrix raw_output;
    DenseMatrix normalized_output;
  };

  DenseMatrix run(const DenseMatrix& x, Cache* cache) const;

  EncoderConfig config_;
  LinearLayer input_;
  std::vector<EncoderBlock> blocks_;
  LinearLayer output_;
  bool normalize_output_ = false;
  std::optional<Cache> cache_;
};

EncoderModel replace_linears(EncoderModel model, LinearMode mode, float beta = kDefaultBeta);

struct PackedBlock {
  LayerNormParams norm;
  PackedTernaryMatrix fc1;
  PackedTernaryMatrix fc2;
};

// Frozen inference form of a ternary encoder: linear layers as bit-planes,
// norms and biases kept in 32-bit float.
struct PackedEncoder {
  EncoderConfig config;
  bool normalize_output = false;
  PackedTernaryMatrix input;
  std::vector<PackedBlock> blocks;
  PackedTernaryMatrix output;

  DenseMatrix embed(const DenseMatrix& x) const;
  std::vector<const PackedTernaryMatrix*> layers() const;
};

// Freezes each layer's gamma at its current value. Every linear layer must
// be in ternary mode.
PackedEncoder export_packed(const EncoderModel& model);

}  // namespace ternkit
