#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ternkit/encoder.hpp"
#include "ternkit/tensor.hpp"

namespace ternkit {

// Training hyperparameters. The learning rate follows the step schedule
// lr_initial · lr_factor^floor(epoch / lr_step_epochs), so (1e-3, 2, 0.5)
// halves the rate every two epochs.
struct TrainConfig {
  float beta = kDefaultBeta;
  std::size_t epochs = 5;
  double lr_initial = 1e-3;
  std::size_t lr_step_epochs = 2;
  double lr_factor = 0.5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

double lr_at(const TrainConfig& config, std::size_t epoch);

struct MseResult {
  double loss = 0.0;
  DenseMatrix grad;  // d loss / d pred
};

MseResult mse_loss(const DenseMatrix& pred, const DenseMatrix& target);

struct AdamState {
  std::vector<std::vector<float>> first_moment;
  std::vector<std::vector<float>> second_moment;
  std::uint64_t step = 0;
};

struct AdamHyperparams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update. Moments are allocated on the first call.
void adam_step(AdamState& state, std::span<const std::span<float>> params,
               std::span<const std::span<const float>> grads, double lr,
               const AdamHyperparams& hyper = {});

struct BatchLog {
  std::size_t epoch;
  std::size_t batch;
  double loss;
  double lr;
};

struct EpochLog {
  std::size_t epoch;
  double train_loss;    // mean of the epoch's batch losses
  double heldout_mse;   // student vs teacher after the epoch
  double lr;
};

struct DistillResult {
  EncoderModel student;
  std::vector<EpochLog> epochs;
  std::vector<BatchLog> batches;
  double initial_heldout_mse = 0.0;  // before any update, i.e. the PTQ-only baseline
};

// Rows of `data` at `indices`.
DenseMatrix gather_rows(const DenseMatrix& data, std::span<const std::size_t> indices);

struct HeldOutSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> heldout;
};

// Seeded 90/10 split; the held-out part has at least one row.
HeldOutSplit split_heldout(std::size_t n, std::uint64_t seed);

// Produces the regression target for a batch; `rows` are the batch's row
// indices into the training inputs.
using TargetFn =
    std::function<DenseMatrix(const DenseMatrix& batch_inputs, std::span<const std::size_t> rows)>;

// One pass over `order` in batches of config.batch_size. Throws
// std::runtime_error if a loss is not finite.
std::vector<BatchLog> train_epoch(EncoderModel& model, AdamState& state, const DenseMatrix& inputs,
                                  std::span<const std::size_t> order, const TargetFn& targets,
                                  const TrainConfig& config, std::size_t epoch);

double heldout_mse(const EncoderModel& teacher, const EncoderModel& student,
                   const DenseMatrix& data);

// Self-distillation: the frozen teacher's outputs are MSE targets for the
// student. Each batch runs teacher forward, student forward, MSE, backward
// and one Adam step at lr_at(epoch).
DistillResult distill(const EncoderModel& teacher, EncoderModel student, const DenseMatrix& data,
                      const TrainConfig& config);

// Student initialized as an exact copy of the teacher with ternary linears.
EncoderModel make_student(const EncoderModel& teacher, float beta);

}  // namespace ternkit
