#include <gtest/gtest.h>

#include <cmath>

#include "ternkit/distiller.hpp"
#include "ternkit/encoder.hpp"
#include "ternkit/packed.hpp"

using namespace ternkit;

namespace {

// Largest per-tensor ||analytic - numeric|| / ||numeric|| over all parameters.
double worst_gradient_error(EncoderModel& model, const DenseMatrix& x, const DenseMatrix& target,
                            float h) {
  const auto out = model.forward(x);
  const auto grads = model.backward(mse_loss(out, target).grad);
  const auto analytic = grads.flat();
  auto params = model.parameters();
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    double num_sq = 0.0, diff_sq = 0.0;
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const float saved = params[p][i];
      params[p][i] = saved + h;
      const double up = mse_loss(model.embed(x), target).loss;
      params[p][i] = saved - h;
      const double down = mse_loss(model.embed(x), target).loss;
      params[p][i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      num_sq += numeric * numeric;
      diff_sq += (numeric - analytic[p][i]) * (numeric - analytic[p][i]);
    }
    worst = std::max(worst, std::sqrt(diff_sq / std::max(num_sq, 1e-30)));
  }
  return worst;
}

}  // namespace

TEST(EncoderConfigTest, Validation) {
  EXPECT_NO_THROW((EncoderConfig{4, 4, 4, 1, 0}.validate()));
  EXPECT_THROW((EncoderConfig{0, 4, 4, 1, 0}.validate()), std::invalid_argument);
  EXPECT_THROW((EncoderConfig{4, 4, 4, 0, 0}.validate()), std::invalid_argument);
}

TEST(EncoderTest, ZeroWeightsGiveZeroEmbeddings) {
  EncoderModel model(EncoderConfig{3, 3, 3, 1, 0});
  for (auto p : model.parameters()) std::fill(p.begin(), p.end(), 0.0f);
  auto& norm = model.blocks()[0].norm;
  std::fill(norm.gain.begin(), norm.gain.end(), 1.0f);
  const auto y = model.embed(DenseMatrix::from_rows({{1, 2, 3}, {-4, 0, 9}}));
  for (float v : y.data()) EXPECT_EQ(v, 0.0f);
}

TEST(EncoderTest, TernaryLayerHandExample) {
  LinearLayer layer{DenseMatrix::from_rows({{3, -1}, {2, 0}}), {0, 0}, LinearMode::ternary, 1.0f};
  EXPECT_FLOAT_EQ(layer.gamma(), 1.5f);
  EXPECT_EQ(layer.effective_weight(), DenseMatrix::from_rows({{1.5f, 0}, {1.5f, 0}}));
  EXPECT_EQ(layer.forward(DenseMatrix::from_rows({{1, 1}})), DenseMatrix::from_rows({{1.5f, 1.5f}}));
  layer.mode = LinearMode::full_precision;
  EXPECT_EQ(layer.forward(DenseMatrix::from_rows({{1, 1}})), DenseMatrix::from_rows({{2, 2}}));
}

TEST(EncoderTest, SameSeedSameOutputs) {
  const EncoderConfig config{16, 16, 8, 2, 77};
  EncoderModel a(config), b(config);
  Rng rng(1);
  const auto x = gaussian_fill(rng, 5, 16, 1.0f);
  EXPECT_EQ(a.embed(x), b.embed(x));
  EncoderModel c(EncoderConfig{16, 16, 8, 2, 78});
  EXPECT_NE(a.embed(x), c.embed(x));
}

TEST(EncoderTest, ForwardMatchesEmbed) {
  EncoderModel model(EncoderConfig{8, 12, 6, 3, 4});
  Rng rng(2);
  const auto x = gaussian_fill(rng, 4, 8, 1.0f);
  EXPECT_EQ(model.forward(x), model.embed(x));
  model.set_normalize_output(true);
  const auto y = model.embed(x);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    double n = 0.0;
    for (float v : y.row(r)) n += double(v) * v;
    EXPECT_NEAR(n, 1.0, 1e-5);
  }
}

TEST(EncoderTest, PtqConsistency) {
  EncoderModel teacher(EncoderConfig{8, 8, 8, 2, 5});
  EncoderModel manual = teacher;
  auto quantize = [](LinearLayer& l) {
    l.weight = ternarize(l.weight, compute_threshold(l.weight, 2.0f)).dequantize();
  };
  quantize(manual.input_layer());
  for (auto& b : manual.blocks()) {
    quantize(b.fc1);
    quantize(b.fc2);
  }
  quantize(manual.output_layer());
  const auto student = replace_linears(teacher, LinearMode::ternary, 2.0f);
  Rng rng(3);
  const auto x = gaussian_fill(rng, 6, 8, 1.0f);
  EXPECT_EQ(student.embed(x), manual.embed(x));
  for (const auto* l : student.linear_layers()) EXPECT_EQ(l->mode, LinearMode::ternary);
}

TEST(EncoderTest, ParameterNamesAlignWithParameters) {
  EncoderModel model(EncoderConfig{4, 6, 5, 2, 0});
  const auto names = model.parameter_names();
  const auto params = model.parameters();
  ASSERT_EQ(names.size(), params.size());
  EXPECT_EQ(names.front(), "input.weight");
  EXPECT_EQ(names.back(), "output.bias");
  EXPECT_EQ(params.front().size(), 24u);
  EXPECT_EQ(params.back().size(), 5u);
}

TEST(EncoderGradientTest, FullPrecisionMatchesFiniteDifferences) {
  EncoderModel model(EncoderConfig{8, 8, 8, 2, 3});
  Rng rng(5);
  const auto x = gaussian_fill(rng, 4, 8, 1.0f);
  const auto target = gaussian_fill(rng, 4, 8, 0.3f);
  EXPECT_LE(worst_gradient_error(model, x, target, 1e-3f), 1e-3);
}

TEST(EncoderGradientTest, NormalizedOutputMatchesFiniteDifferences) {
  EncoderModel model(EncoderConfig{8, 8, 8, 2, 6});
  model.set_normalize_output(true);
  Rng rng(6);
  const auto x = gaussian_fill(rng, 4, 8, 1.0f);
  const auto target = l2_normalize_rows(gaussian_fill(rng, 4, 8, 1.0f));
  EXPECT_LE(worst_gradient_error(model, x, target, 1e-3f), 5e-3);
}

TEST(EncoderGradientTest, StraightThroughSingleLayer) {
  LinearLayer layer{DenseMatrix::from_rows({{3, -1, 0.5f}, {2, 0, -4}}), {0, 0},
                    LinearMode::ternary, 1.0f};
  const float gamma = layer.gamma();
  const auto x = DenseMatrix::from_rows({{0.5f, -2, 3}});
  LinearGradients g;
  const auto dx = linear_backward(layer, x, DenseMatrix::from_rows({{1, 1}}), g);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(g.weight(r, c), gamma * x(0, c));
  }
  EXPECT_EQ(g.bias, (std::vector<float>{1, 1}));
  const auto w_eff = layer.effective_weight();
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(dx(0, c), w_eff(0, c) + w_eff(1, c));
}

TEST(EncoderGradientTest, ZeroUpstreamGivesZeroGradients) {
  EncoderModel model(EncoderConfig{5, 7, 3, 2, 1});
  Rng rng(7);
  model.forward(gaussian_fill(rng, 3, 5, 1.0f));
  const auto grads = model.backward(DenseMatrix(3, 3));
  for (auto g : grads.flat()) {
    for (float v : g) EXPECT_EQ(v, 0.0f);
  }
}

TEST(EncoderGradientTest, BackwardRequiresForward) {
  EncoderModel model(EncoderConfig{2, 2, 2, 1, 0});
  EXPECT_THROW(model.backward(DenseMatrix(1, 2)), StateError);
  model.forward(DenseMatrix(1, 2));
  EXPECT_THROW(model.backward(DenseMatrix(1, 3)), ShapeError);
}

TEST(PackedEncoderTest, ExportMatchesTernaryForward) {
  EncoderModel model(EncoderConfig{20, 24, 12, 2, 9});
  model.set_normalize_output(true);
  EXPECT_THROW(export_packed(model), StateError);
  model.replace_linears(LinearMode::ternary, 2.0f);
  const auto packed = export_packed(model);
  Rng rng(10);
  const auto x = gaussian_fill(rng, 7, 20, 1.0f);
  const auto a = model.embed(x);
  const auto b = packed.embed(x);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-5);
}
