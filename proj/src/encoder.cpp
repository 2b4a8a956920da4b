#include "ternkit/encoder.hpp"

#include <cmath>

namespace ternkit {

void EncoderConfig::validate() const {
  if (input_dim == 0 || hidden_dim == 0 || output_dim == 0) {
    throw std::invalid_argument("EncoderConfig: dimensions must be >= 1");
  }
  if (num_blocks == 0) throw std::invalid_argument("EncoderConfig: num_blocks must be >= 1");
}

const char* to_string(LinearMode mode) {
  return mode == LinearMode::ternary ? "ternary" : "full_precision";
}

LinearMode linear_mode_from_string(const std::string& name) {
  if (name == "ternary") return LinearMode::ternary;
  if (name == "full_precision") return LinearMode::full_precision;
  throw std::invalid_argument("unknown linear mode: " + name);
}

LinearLayer LinearLayer::gaussian(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
  const float sigma = 1.0f / std::sqrt(static_cast<float>(in_dim));
  return {gaussian_fill(rng, out_dim, in_dim, sigma), std::vector<float>(out_dim, 0.0f),
          LinearMode::full_precision, kDefaultBeta};
}

float LinearLayer::gamma() const { return compute_threshold(weight, beta); }

DenseMatrix LinearLayer::effective_weight() const {
  if (mode == LinearMode::full_precision) return weight;
  return ternarize(weight, gamma()).dequantize();
}

DenseMatrix LinearLayer::forward(const DenseMatrix& x) const {
  return add_row_bias(matmul_transposed(x, effective_weight()), bias);
}

namespace {

std::vector<float> column_sums(const DenseMatrix& m) {
  std::vector<double> acc(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) acc[j] += row[j];
  }
  return {acc.begin(), acc.end()};
}

// Returns dL/dx and fills the weight/bias gradients.
template <typename Cache>
DenseMatrix linear_backward(const Cache& cache, const DenseMatrix& upstream,
                            LinearGradients& grads) {
  grads.weight = transposed_matmul(upstream, cache.input);
  if (cache.grad_scale != 1.0f) {
    for (float& g : grads.weight.data()) g *= cache.grad_scale;
  }
  grads.bias = column_sums(upstream);
  return matmul(upstream, cache.effective_weight);
}

struct LayerView {
  const DenseMatrix& input;
  float grad_scale;
  DenseMatrix effective_weight;
};

DenseMatrix layer_norm_backward(const RowNormalization& norm, const LayerNormParams& params,
                                const DenseMatrix& upstream, NormGradients& grads) {
  const std::size_t n = upstream.cols();
  std::vector<double> dgain(n, 0.0), dshift(n, 0.0);
  DenseMatrix dx(upstream.rows(), n);
  std::vector<double> dxhat(n);
  for (std::size_t i = 0; i < upstream.rows(); ++i) {
    const auto dy = upstream.row(i);
    const auto xhat = norm.normalized.row(i);
    double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      dgain[j] += static_cast<double>(dy[j]) * xhat[j];
      dshift[j] += dy[j];
      dxhat[j] = static_cast<double>(dy[j]) * params.gain[j];
      sum_dxhat += dxhat[j];
      sum_dxhat_xhat += dxhat[j] * xhat[j];
    }
    const double k = norm.inv_std[i] / static_cast<double>(n);
    auto out = dx.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      out[j] = static_cast<float>(
          k * (static_cast<double>(n) * dxhat[j] - sum_dxhat - xhat[j] * sum_dxhat_xhat));
    }
  }
  grads.gain.assign(dgain.begin(), dgain.end());
  grads.shift.assign(dshift.begin(), dshift.end());
  return dx;
}

DenseMatrix l2_normalize_backward(const DenseMatrix& raw, const DenseMatrix& normalized,
                                  const DenseMatrix& upstream) {
  DenseMatrix dx(raw.rows(), raw.cols());
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    const auto x = raw.row(i);
    const auto y = normalized.row(i);
    const auto dy = upstream.row(i);
    double sq = 0.0, dot = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      sq += static_cast<double>(x[j]) * x[j];
      dot += static_cast<double>(y[j]) * dy[j];
    }
    if (sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    auto out = dx.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) {
      out[j] = static_cast<float>((dy[j] - y[j] * dot) * inv);
    }
  }
  return dx;
}

void append(std::vector<std::span<const float>>& out, const LinearGradients& g) {
  out.emplace_back(g.weight.data());
  out.emplace_back(g.bias);
}

}  // namespace

DenseMatrix linear_backward(const LinearLayer& layer, const DenseMatrix& input,
                            const DenseMatrix& upstream, LinearGradients& grads) {
  if (input.cols() != layer.in_dim() || upstream.cols() != layer.out_dim() ||
      input.rows() != upstream.rows()) {
    throw ShapeError("linear_backward: input " + shape_string(input) + ", upstream " +
                     shape_string(upstream));
  }
  const LayerView view{input, layer.mode == LinearMode::ternary ? layer.gamma() : 1.0f,
                       layer.effective_weight()};
  return linear_backward(view, upstream, grads);
}

std::vector<std::span<const float>> EncoderGradients::flat() const {
  std::vector<std::span<const float>> out;
  append(out, input);
  for (const auto& b : blocks) {
    out.emplace_back(b.norm.gain);
    out.emplace_back(b.norm.shift);
    append(out, b.fc1);
    append(out, b.fc2);
  }
  append(out, output);
  return out;
}

EncoderModel::EncoderModel(const EncoderConfig& config) : config_(config) {
  config_.validate();
  Rng rng(config_.seed);
  input_ = LinearLayer::gaussian(config_.input_dim, config_.hidden_dim, rng);
  blocks_.reserve(config_.num_blocks);
  for (std::size_t b = 0; b < config_.num_blocks; ++b) {
    EncoderBlock block{LayerNormParams(config_.hidden_dim),
                       LinearLayer::gaussian(config_.hidden_dim, config_.hidden_dim, rng),
                       LinearLayer::gaussian(config_.hidden_dim, config_.hidden_dim, rng)};
    blocks_.push_back(std::move(block));
  }
  output_ = LinearLayer::gaussian(config_.hidden_dim, config_.output_dim, rng);
}

DenseMatrix EncoderModel::run(const DenseMatrix& x, Cache* cache) const {
  if (x.cols() != config_.input_dim) {
    throw ShapeError("encoder: input has " + std::to_string(x.cols()) + " features, expected " +
                     std::to_string(config_.input_dim));
  }
  auto apply = [cache](const LinearLayer& layer, const DenseMatrix& in, LinearCache* lc) {
    DenseMatrix w = layer.effective_weight();
    DenseMatrix out = add_row_bias(matmul_transposed(in, w), layer.bias);
    if (cache) {
      lc->input = in;
      lc->grad_scale = layer.mode == LinearMode::ternary ? layer.gamma() : 1.0f;
      lc->effective_weight = std::move(w);
    }
    return out;
  };

  if (cache) cache->blocks.resize(blocks_.size());
  DenseMatrix h = apply(input_, x, cache ? &cache->input : nullptr);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const EncoderBlock& block = blocks_[b];
    BlockCache* bc = cache ? &cache->blocks[b] : nullptr;
    RowNormalization norm = normalize_rows(h);
    DenseMatrix normed = norm.normalized;
    for (std::size_t i = 0; i < normed.rows(); ++i) {
      auto row = normed.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) {
        row[j] = row[j] * block.norm.gain[j] + block.norm.shift[j];
      }
    }
    DenseMatrix pre = apply(block.fc1, normed, bc ? &bc->fc1 : nullptr);
    DenseMatrix activated = gelu(pre);
    DenseMatrix delta = apply(block.fc2, activated, bc ? &bc->fc2 : nullptr);
    if (bc) {
      bc->norm = std::move(norm);
      bc->pre_activation = std::move(pre);
    }
    h = add(h, delta);
  }
  DenseMatrix out = apply(output_, h, cache ? &cache->output : nullptr);
  if (!normalize_output_) return out;
  DenseMatrix normalized = l2_normalize_rows(out);
  if (cache) {
    cache->raw_output = out;
    cache->normalized_output = normalized;
  }
  return normalized;
}

DenseMatrix EncoderModel::embed(const DenseMatrix& x) const { return run(x, nullptr); }

DenseMatrix EncoderModel::forward(const DenseMatrix& x) {
  Cache cache;
  DenseMatrix out = run(x, &cache);
  cache_ = std::move(cache);
  return out;
}

EncoderGradients EncoderModel::backward(const DenseMatrix& upstream) {
  if (!cache_) throw StateError("backward called without a preceding forward");
  Cache cache = std::move(*cache_);
  cache_.reset();
  if (upstream.rows() != cache.input.input.rows() || upstream.cols() != config_.output_dim) {
    throw ShapeError("backward: upstream gradient " + shape_string(upstream) +
                     " does not match output");
  }

  EncoderGradients grads;
  grads.blocks.resize(blocks_.size());
  DenseMatrix d_out =
      normalize_output_ ? l2_normalize_backward(cache.raw_output, cache.normalized_output, upstream)
                        : upstream;
  DenseMatrix dh = linear_backward(cache.output, d_out, grads.output);
  for (std::size_t b = blocks_.size(); b-- > 0;) {
    const BlockCache& bc = cache.blocks[b];
    BlockGradients& bg = grads.blocks[b];
    DenseMatrix d_act = linear_backward(bc.fc2, dh, bg.fc2);
    auto d = d_act.data();
    const auto pre = bc.pre_activation.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= gelu_derivative(pre[i]);
    DenseMatrix d_normed = linear_backward(bc.fc1, d_act, bg.fc1);
    dh = add(dh, layer_norm_backward(bc.norm, blocks_[b].norm, d_normed, bg.norm));
  }
  linear_backward(cache.input, dh, grads.input);
  return grads;
}

void EncoderModel::replace_linears(LinearMode mode, float beta) {
  if (mode == LinearMode::ternary && !(beta > 0.0f)) {
    throw std::invalid_argument("replace_linears: beta must be positive");
  }
  cache_.reset();
  auto set = [&](LinearLayer& layer) {
    layer.mode = mode;
    layer.beta = beta;
  };
  set(input_);
  for (auto& block : blocks_) {
    set(block.fc1);
    set(block.fc2);
  }
  set(output_);
}

std::vector<std::span<float>> EncoderModel::parameters() {
  std::vector<std::span<float>> out;
  auto linear = [&](LinearLayer& l) {
    out.emplace_back(l.weight.data());
    out.emplace_back(l.bias);
  };
  linear(input_);
  for (auto& block : blocks_) {
    out.emplace_back(block.norm.gain);
    out.emplace_back(block.norm.shift);
    linear(block.fc1);
    linear(block.fc2);
  }
  linear(output_);
  return out;
}

std::vector<std::span<const float>> EncoderModel::parameters() const {
  auto mutable_params = const_cast<EncoderModel*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

std::vector<std::string> EncoderModel::parameter_names() const {
  std::vector<std::string> names{"input.weight", "input.bias"};
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const std::string prefix = "blocks." + std::to_string(b) + ".";
    for (const char* leaf :
         {"norm.gain", "norm.shift", "fc1.weight", "fc1.bias", "fc2.weight", "fc2.bias"}) {
      names.push_back(prefix + leaf);
    }
  }
  names.emplace_back("output.weight");
  names.emplace_back("output.bias");
  return names;
}

std::vector<const LinearLayer*> EncoderModel::linear_layers() const {
  std::vector<const LinearLayer*> out{&input_};
  for (const auto& block : blocks_) {
    out.push_back(&block.fc1);
    out.push_back(&block.fc2);
  }
  out.push_back(&output_);
  return out;
}

EncoderModel replace_linears(EncoderModel model, LinearMode mode, float beta) {
  model.replace_linears(mode, beta);
  return model;
}

DenseMatrix PackedEncoder::embed(const DenseMatrix& x) const {
  if (x.cols() != config.input_dim) {
    throw ShapeError("packed encoder: input has " + std::to_string(x.cols()) +
                     " features, expected " + std::to_string(config.input_dim));
  }
  DenseMatrix h = packed_apply_rows(input, x);
  for (const auto& block : blocks) {
    DenseMatrix delta =
        packed_apply_rows(block.fc2, gelu(packed_apply_rows(block.fc1, block.norm.apply(h))));
    h = add(h, delta);
  }
  DenseMatrix out = packed_apply_rows(output, h);
  return normalize_output ? l2_normalize_rows(out) : out;
}

std::vector<const PackedTernaryMatrix*> PackedEncoder::layers() const {
  std::vector<const PackedTernaryMatrix*> out{&input};
  for (const auto& block : blocks) {
    out.push_back(&block.fc1);
    out.push_back(&block.fc2);
  }
  out.push_back(&output);
  return out;
}

namespace {

PackedTernaryMatrix export_layer(const LinearLayer& layer) {
  if (layer.mode != LinearMode::ternary) {
    throw StateError("export_packed: every linear layer must be in ternary mode");
  }
  return pack(ternarize(layer.weight, layer.gamma()), layer.bias);
}

}  // namespace

PackedEncoder export_packed(const EncoderModel& model) {
  PackedEncoder out;
  out.config = model.config();
  out.normalize_output = model.normalize_output();
  out.input = export_layer(model.input_layer());
  for (const auto& block : model.blocks()) {
    out.blocks.push_back({block.norm, export_layer(block.fc1), export_layer(block.fc2)});
  }
  out.output = export_layer(model.output_layer());
  return out;
}

}  // namespace ternkit
