#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ternkit/distiller.hpp"
#include "ternkit/encoder.hpp"

namespace ternkit {

// Cluster-embedding task used in place of a pre-trained checkpoint: K
// Gaussian prototypes in input space, each paired with a k-hot code in
// output space. A teacher trained to map points to their cluster's code
// gives embeddings where same-cluster retrieval is meaningful.
struct SyntheticTaskSpec {
  std::size_t num_clusters = 100;
  std::size_t num_points = 5000;
  float prototype_sigma = 1.0f;
  float cluster_spread = 0.6f;
  std::size_t code_active = 4;  // ones per code, must be <= output_dim
  bool normalize_output = true;
  std::size_t train_epochs = 8;
  double lr = 1e-3;
  std::size_t batch_size = 32;
  std::uint64_t seed = 7;

  void validate() const;
};

struct LabeledPoints {
  DenseMatrix points;
  std::vector<std::uint32_t> labels;
};

struct SyntheticTask {
  SyntheticTaskSpec spec;
  DenseMatrix prototypes;  // K × input_dim
  DenseMatrix codes;       // K × output_dim, unit-norm rows

  // n points with labels i % K, i.e. balanced clusters.
  LabeledPoints sample(std::size_t n, Rng& rng) const;
};

SyntheticTask make_synthetic_task(const EncoderConfig& config, const SyntheticTaskSpec& spec);

struct SyntheticTeacher {
  EncoderModel teacher;
  SyntheticTask task;
  LabeledPoints train_points;
  std::vector<double> epoch_losses;
};

// Builds the task and trains a full-precision teacher on it.
SyntheticTeacher make_synthetic_teacher(const EncoderConfig& config,
                                        const SyntheticTaskSpec& spec);

}  // namespace ternkit
