#include "ternkit/distiller.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ternkit {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (!(lr_initial > 0.0)) throw std::invalid_argument("TrainConfig: lr_initial must be > 0");
  if (lr_step_epochs < 1) throw std::invalid_argument("TrainConfig: lr_step_epochs must be >= 1");
  if (!(lr_factor > 0.0 && lr_factor <= 1.0)) {
    throw std::invalid_argument("TrainConfig: lr_factor must be in (0, 1]");
  }
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(beta > 0.0f)) throw std::invalid_argument("TrainConfig: beta must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw std::invalid_argument("TrainConfig: Adam betas must be in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw std::invalid_argument("TrainConfig: adam_eps must be > 0");
}

double lr_at(const TrainConfig& config, std::size_t epoch) {
  const auto steps = static_cast<double>(epoch / config.lr_step_epochs);
  return config.lr_initial * std::pow(config.lr_factor, steps);
}

MseResult mse_loss(const DenseMatrix& pred, const DenseMatrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ShapeError("mse_loss: " + shape_string(pred) + " vs " + shape_string(target));
  }
  MseResult result{0.0, DenseMatrix(pred.rows(), pred.cols())};
  const double count = static_cast<double>(pred.size());
  const auto p = pred.data();
  const auto t = target.data();
  auto g = result.grad.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double diff = static_cast<double>(p[i]) - t[i];
    sum += diff * diff;
    g[i] = static_cast<float>(2.0 * diff / count);
  }
  result.loss = sum / count;
  return result;
}

void adam_step(AdamState& state, std::span<const std::span<float>> params,
               std::span<const std::span<const float>> grads, double lr,
               const AdamHyperparams& hyper) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), 0.0f);
      state.second_moment.emplace_back(p.size(), 0.0f);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state tracks a different parameter list");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size() || state.first_moment[i].size() != params[i].size()) {
      throw ShapeError("adam_step: shape mismatch in parameter " + std::to_string(i));
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(hyper.beta1, t);
  const double correction2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    const auto g = grads[i];
    auto p = params[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j];
      const double mj = hyper.beta1 * m[j] + (1.0 - hyper.beta1) * gj;
      const double vj = hyper.beta2 * v[j] + (1.0 - hyper.beta2) * gj * gj;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double m_hat = mj / correction1;
      const double v_hat = vj / correction2;
      p[j] = static_cast<float>(p[j] - lr * m_hat / (std::sqrt(v_hat) + hyper.eps));
    }
  }
}

DenseMatrix gather_rows(const DenseMatrix& data, std::span<const std::size_t> indices) {
  DenseMatrix out(indices.size(), data.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = data.row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

HeldOutSplit split_heldout(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("split_heldout: need at least 2 vectors");
  Rng rng = Rng(seed).fork(0x5eed5911);
  std::vector<std::size_t> order = permutation(n, rng);
  const std::size_t heldout = std::max<std::size_t>(1, n / 10);
  HeldOutSplit split;
  split.heldout.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(heldout));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(heldout), order.end());
  return split;
}

std::vector<BatchLog> train_epoch(EncoderModel& model, AdamState& state, const DenseMatrix& inputs,
                                  std::span<const std::size_t> order, const TargetFn& targets,
                                  const TrainConfig& config, std::size_t epoch) {
  const double lr = lr_at(config, epoch);
  const AdamHyperparams hyper{config.adam_beta1, config.adam_beta2, config.adam_eps};
  std::vector<BatchLog> logs;
  std::size_t batch = 0;
  for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch) {
    const auto rows = order.subspan(start, std::min(config.batch_size, order.size() - start));
    const DenseMatrix x = gather_rows(inputs, rows);
    const DenseMatrix target = targets(x, rows);
    const DenseMatrix pred = model.forward(x);
    MseResult loss = mse_loss(pred, target);
    if (!std::isfinite(loss.loss)) {
      throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                               std::to_string(batch));
    }
    const EncoderGradients grads = model.backward(loss.grad);
    const auto flat = grads.flat();
    const auto params = model.parameters();
    adam_step(state, params, flat, lr, hyper);
    logs.push_back({epoch, batch, loss.loss, lr});
  }
  return logs;
}

double heldout_mse(const EncoderModel& teacher, const EncoderModel& student,
                   const DenseMatrix& data) {
  return mse_loss(student.embed(data), teacher.embed(data)).loss;
}

namespace {

void require_parity(const EncoderModel& teacher, const EncoderModel& student) {
  const auto& a = teacher.config();
  const auto& b = student.config();
  if (a.input_dim != b.input_dim || a.hidden_dim != b.hidden_dim ||
      a.output_dim != b.output_dim || a.num_blocks != b.num_blocks ||
      teacher.normalize_output() != student.normalize_output()) {
    throw std::invalid_argument("distill: teacher and student architectures differ");
  }
}

}  // namespace

DistillResult distill(const EncoderModel& teacher, EncoderModel student, const DenseMatrix& data,
                      const TrainConfig& config) {
  config.validate();
  require_parity(teacher, student);
  if (data.empty()) throw std::invalid_argument("distill: empty dataset");
  if (data.cols() != teacher.config().input_dim) {
    throw ShapeError("distill: data has " + std::to_string(data.cols()) + " features, expected " +
                     std::to_string(teacher.config().input_dim));
  }

  const HeldOutSplit split = split_heldout(data.rows(), config.seed);
  const DenseMatrix heldout = gather_rows(data, split.heldout);

  DistillResult result{std::move(student), {}, {}, 0.0};
  result.initial_heldout_mse = heldout_mse(teacher, result.student, heldout);

  const TargetFn teacher_targets = [&teacher](const DenseMatrix& x, std::span<const std::size_t>) {
    return teacher.embed(x);
  };
  AdamState state;
  const Rng base(config.seed);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle = base.fork(epoch + 1);
    std::vector<std::size_t> order = permutation(split.train.size(), shuffle);
    for (auto& idx : order) idx = split.train[idx];
    auto logs = train_epoch(result.student, state, data, order, teacher_targets, config, epoch);
    double sum = 0.0;
    for (const auto& l : logs) sum += l.loss;
    result.epochs.push_back({epoch, sum / static_cast<double>(logs.size()),
                             heldout_mse(teacher, result.student, heldout), lr_at(config, epoch)});
    result.batches.insert(result.batches.end(), logs.begin(), logs.end());
  }
  return result;
}

EncoderModel make_student(const EncoderModel& teacher, float beta) {
  return replace_linears(teacher, LinearMode::ternary, beta);
}

}  // namespace ternkit
