#include "ternkit/synthetic.hpp"

#include <cmath>
#include <stdexcept>

namespace ternkit {

void SyntheticTaskSpec::validate() const {
  if (num_clusters < 2) throw std::invalid_argument("synthetic task: need at least 2 clusters");
  if (num_points < num_clusters) {
    throw std::invalid_argument("synthetic task: fewer points than clusters");
  }
  if (!(prototype_sigma > 0.0f) || !(cluster_spread > 0.0f)) {
    throw std::invalid_argument("synthetic task: sigmas must be positive");
  }
  if (code_active < 1) throw std::invalid_argument("synthetic task: code_active must be >= 1");
  if (train_epochs < 1 || batch_size < 1 || !(lr > 0.0)) {
    throw std::invalid_argument("synthetic task: invalid training settings");
  }
}

LabeledPoints SyntheticTask::sample(std::size_t n, Rng& rng) const {
  LabeledPoints out{DenseMatrix(n, prototypes.cols()), std::vector<std::uint32_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = static_cast<std::uint32_t>(i % prototypes.rows());
    out.labels[i] = label;
    const auto proto = prototypes.row(label);
    auto dst = out.points.row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) {
      dst[j] = proto[j] + static_cast<float>(rng.normal() * spec.cluster_spread);
    }
  }
  return out;
}

SyntheticTask make_synthetic_task(const EncoderConfig& config, const SyntheticTaskSpec& spec) {
  spec.validate();
  config.validate();
  if (spec.code_active > config.output_dim) {
    throw std::invalid_argument("synthetic task: code_active exceeds output_dim");
  }
  Rng rng = Rng(spec.seed).fork(1);
  SyntheticTask task{spec,
                     gaussian_fill(rng, spec.num_clusters, config.input_dim, spec.prototype_sigma),
                     DenseMatrix(spec.num_clusters, config.output_dim)};
  const float level = 1.0f / std::sqrt(static_cast<float>(spec.code_active));
  for (std::size_t k = 0; k < spec.num_clusters; ++k) {
    const auto dims = permutation(config.output_dim, rng);
    for (std::size_t j = 0; j < spec.code_active; ++j) task.codes(k, dims[j]) = level;
  }
  return task;
}

SyntheticTeacher make_synthetic_teacher(const EncoderConfig& config,
                                        const SyntheticTaskSpec& spec) {
  SyntheticTask task = make_synthetic_task(config, spec);
  Rng point_rng = Rng(spec.seed).fork(2);
  LabeledPoints train = task.sample(spec.num_points, point_rng);

  EncoderModel teacher(config);
  teacher.set_normalize_output(spec.normalize_output);
  TrainConfig train_config;
  train_config.epochs = spec.train_epochs;
  train_config.lr_initial = spec.lr;
  train_config.lr_step_epochs = spec.train_epochs;
  train_config.lr_factor = 1.0;
  train_config.batch_size = spec.batch_size;
  train_config.seed = spec.seed;

  SyntheticTeacher out{std::move(teacher), std::move(task), std::move(train), {}};
  const TargetFn code_targets = [&](const DenseMatrix&, std::span<const std::size_t> rows) {
    DenseMatrix target(rows.size(), out.task.codes.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto code = out.task.codes.row(out.train_points.labels[rows[i]]);
      std::copy(code.begin(), code.end(), target.row(i).begin());
    }
    return target;
  };

  AdamState state;
  const Rng base = Rng(spec.seed).fork(3);
  for (std::size_t epoch = 0; epoch < spec.train_epochs; ++epoch) {
    Rng shuffle = base.fork(epoch);
    const auto order = permutation(out.train_points.points.rows(), shuffle);
    const auto logs = train_epoch(out.teacher, state, out.train_points.points, order, code_targets,
                                  train_config, epoch);
    double sum = 0.0;
    for (const auto& l : logs) sum += l.loss;
    out.epoch_losses.push_back(sum / static_cast<double>(logs.size()));
  }
  return out;
}

}  // namespace ternkit
