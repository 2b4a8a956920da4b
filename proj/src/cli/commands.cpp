#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "ternkit/ann/evaluate.hpp"
#include "ternkit/bench.hpp"
#include "ternkit/cli.hpp"
#include "ternkit/distiller.hpp"
#include "ternkit/packed.hpp"
#include "ternkit/storage.hpp"
#include "ternkit/synthetic.hpp"
#include "ternkit/ternarizer.hpp"

namespace ternkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// TERNKIT_SEED, when set, replaces every seed taken from flags or configs.
std::uint64_t resolve_seed(std::uint64_t fallback) {
  const char* env = std::getenv("TERNKIT_SEED");
  if (!env || !*env) return fallback;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw UsageError(std::string("TERNKIT_SEED is not an unsigned integer: ") + env);
  }
}

std::string read_text(const fs::path& path) {
  const auto bytes = io::read_file(path);
  return {bytes.begin(), bytes.end()};
}

void write_text(const fs::path& path, const std::string& text) {
  io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

DenseMatrix load_weight_matrix(const fs::path& path) {
  const io::TensorContainer t = io::load_tensor(path);
  if (t.dtype != io::DType::f32 || t.dims.size() != 2) {
    throw io::FormatError(io::ErrorCode::invariant_violation,
                          path.string() + " is not a rank-2 f32 tensor");
  }
  return t.matrix();
}

// --- gen-weights -----------------------------------------------------------

struct GenWeightsArgs {
  std::size_t rows = 256;
  std::size_t cols = 256;
  float sigma = 1.0f;
  std::uint64_t seed = 0;
  std::string out;
};

int gen_weights(const GenWeightsArgs& a, std::ostream& out) {
  const std::uint64_t seed = resolve_seed(a.seed);
  Rng rng(seed);
  io::save_tensor(a.out, io::TensorContainer::from_matrix(gaussian_fill(rng, a.rows, a.cols, a.sigma)));
  out << json{{"rows", a.rows}, {"cols", a.cols}, {"sigma", a.sigma}, {"seed", seed}, {"out", a.out}}.dump()
      << "\n";
  return kOk;
}

// --- ternarize -------------------------------------------------------------

struct TernarizeArgs {
  std::string weights;
  float beta = kDefaultBeta;
  bool twn = false;
  std::string out;
};

int ternarize_cmd(const TernarizeArgs& a, std::ostream& out, std::ostream& err) {
  const DenseMatrix w = load_weight_matrix(a.weights);
  const TernarizeConfig config{a.beta, a.twn};
  const TernaryMatrix t = ternarize(w, config);
  const PackedTernaryMatrix p = pack(t);
  io::save_packed_layer(a.out, p);
  const double s = sparsity(t);
  out << json{{"rows", t.rows},         {"cols", t.cols},
              {"beta", config.effective_beta()}, {"gamma", t.gamma},
              {"sparsity", s},          {"record_bytes", storage_bytes(p)},
              {"dense_bytes", sizeof(float) * t.rows * t.cols}, {"out", a.out}}
             .dump()
      << "\n";
  err << "gamma=" << t.gamma << " sparsity=" << std::fixed << std::setprecision(4) << s << "\n";
  return kOk;
}

// --- sparsity-sweep --------------------------------------------------------

struct SweepArgs {
  std::string weights;
  std::vector<float> betas;
};

int sparsity_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  for (float b : a.betas) {
    if (!(b > 0.0f)) throw UsageError("--betas: every beta must be positive");
  }
  const DenseMatrix w = load_weight_matrix(a.weights);
  const auto rows = beta_sweep(w, a.betas);
  err << std::setw(8) << "beta" << std::setw(14) << "gamma" << std::setw(12) << "sparsity" << "\n";
  for (const auto& r : rows) {
    out << json{{"beta", r.beta}, {"gamma", r.gamma}, {"sparsity", r.sparsity}}.dump() << "\n";
    err << std::fixed << std::setw(8) << std::setprecision(3) << r.beta << std::setw(14)
        << std::setprecision(6) << r.gamma << std::setw(12) << std::setprecision(4) << r.sparsity
        << "\n";
  }
  return kOk;
}

// --- make-teacher ----------------------------------------------------------

struct MakeTeacherArgs {
  std::string out_dir;
  EncoderConfig encoder;
  SyntheticTaskSpec task;
  std::size_t corpus = 5000;
  std::size_t queries = 200;
  std::size_t distill_points = 10000;
};

int make_teacher(MakeTeacherArgs a, std::ostream& out, std::ostream& err) {
  a.task.seed = resolve_seed(a.task.seed);
  a.encoder.seed = a.task.seed;
  if (a.corpus == 0 || a.queries == 0 || a.distill_points < 2) {
    throw UsageError("corpus and queries must be >= 1, distill points >= 2");
  }
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);

  SyntheticTeacher st = make_synthetic_teacher(a.encoder, a.task);
  Rng rng = Rng(a.task.seed).fork(100);
  const LabeledPoints distill_set = st.task.sample(a.distill_points, rng);
  const LabeledPoints corpus = st.task.sample(a.corpus, rng);
  const LabeledPoints queries = st.task.sample(a.queries, rng);

  io::save_checkpoint(dir / "teacher.ckpt", st.teacher);
  io::save_vectors(dir / "distill.vec", distill_set.points);
  io::save_vectors(dir / "corpus.vec", corpus.points);
  io::save_vectors(dir / "queries.vec", queries.points);
  write_text(dir / "labels.json",
             json{{"corpus", corpus.labels}, {"queries", queries.labels}}.dump() + "\n");

  out << json{{"teacher", (dir / "teacher.ckpt").string()},
              {"clusters", a.task.num_clusters},
              {"seed", a.task.seed},
              {"teacher_epoch_losses", st.epoch_losses}}
             .dump()
      << "\n";
  err << "teacher trained: final epoch loss " << st.epoch_losses.back() << "\n";
  return kOk;
}

// --- distill ---------------------------------------------------------------

struct DistillArgs {
  std::string config;
  std::string data;
  std::string teacher;
  std::string out;
  std::string packed_out;
  std::string log;
};

EncoderModel load_dense(const fs::path& path) {
  io::Checkpoint ckpt = io::load_checkpoint(path);
  if (!std::holds_alternative<EncoderModel>(ckpt)) {
    throw io::FormatError(io::ErrorCode::config, path.string() + " is a packed checkpoint");
  }
  return std::get<EncoderModel>(std::move(ckpt));
}

int distill_cmd(const DistillArgs& a, std::ostream& out, std::ostream& err) {
  TrainConfig config = io::train_config_from_json(read_text(a.config));
  config.seed = resolve_seed(config.seed);
  const EncoderModel teacher = load_dense(a.teacher);
  const DenseMatrix data = io::load_vectors(a.data);

  DistillResult result = distill(teacher, make_student(teacher, config.beta), data, config);

  std::ostringstream log;
  for (const auto& b : result.batches) {
    log << json{{"epoch", b.epoch}, {"batch", b.batch}, {"loss", b.loss}, {"lr", b.lr}}.dump()
        << "\n";
  }
  if (a.log.empty()) {
    out << log.str();
  } else {
    write_text(a.log, log.str());
  }

  io::save_checkpoint(a.out, result.student);
  if (!a.packed_out.empty()) io::save_checkpoint(a.packed_out, export_packed(result.student));

  json epochs = json::array();
  for (const auto& e : result.epochs) {
    epochs.push_back(
        {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"heldout_mse", e.heldout_mse}, {"lr", e.lr}});
  }
  out << json{{"initial_heldout_mse", result.initial_heldout_mse},
              {"final_heldout_mse", result.epochs.back().heldout_mse},
              {"epochs", epochs},
              {"student", a.out}}
             .dump()
      << "\n";
  err << "held-out MSE " << result.initial_heldout_mse << " -> " << result.epochs.back().heldout_mse
      << "\n";
  return kOk;
}

// --- eval-retrieval --------------------------------------------------------

struct EvalArgs {
  std::string model;
  std::string dataset;
  std::string queries;
  std::string labels;
  std::string index;
  std::vector<std::size_t> ks{1, 5, 10};
  std::uint64_t seed = 0;
};

std::vector<std::uint32_t> label_array(const json& j, const char* key) {
  try {
    return j.at(key).get<std::vector<std::uint32_t>>();
  } catch (const json::exception& e) {
    throw io::FormatError(io::ErrorCode::config, std::string("labels.") + key + ": " + e.what());
  }
}

int eval_retrieval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const ann::IndexKind kind = ann::index_kind_from_string(a.index);
  const io::Checkpoint model = io::load_checkpoint(a.model);
  const DenseMatrix corpus = io::load_vectors(a.dataset);
  const DenseMatrix queries = io::load_vectors(a.queries);
  json labels;
  try {
    labels = json::parse(read_text(a.labels));
  } catch (const json::exception& e) {
    throw io::FormatError(io::ErrorCode::config, std::string("labels: ") + e.what());
  }
  const auto corpus_labels = label_array(labels, "corpus");
  const auto query_labels = label_array(labels, "queries");
  if (corpus_labels.size() != corpus.rows() || query_labels.size() != queries.rows()) {
    throw io::FormatError(io::ErrorCode::invariant_violation,
                          "label counts do not match the vector files");
  }
  for (std::size_t k : a.ks) {
    if (k == 0 || k > corpus.rows()) {
      throw UsageError("--k " + std::to_string(k) + " outside [1, corpus size " +
                       std::to_string(corpus.rows()) + "]");
    }
  }

  const auto start = std::chrono::steady_clock::now();
  const auto embed = [&](const DenseMatrix& x) {
    return std::visit([&](const auto& m) { return m.embed(x); }, model);
  };
  const DenseMatrix corpus_emb = l2_normalize_rows(embed(corpus));
  const DenseMatrix query_emb = l2_normalize_rows(embed(queries));
  const double embed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ann::VectorStore store(corpus_emb);
  const auto settings = ann::default_index_settings(store.size(), store.dim(), resolve_seed(a.seed));
  const ann::AnnIndex index = ann::AnnIndex::build(kind, std::move(store), settings);
  const auto relevant = ann::relevant_by_label(corpus_labels, query_labels);
  for (const auto& r : relevant) {
    if (r.empty()) {
      throw io::FormatError(io::ErrorCode::invariant_violation,
                            "a query label has no corpus members");
    }
  }
  const auto metrics = ann::evaluate_retrieval(index, query_emb, relevant, a.ks);

  json precision = json::object(), recall = json::object();
  for (std::size_t i = 0; i < metrics.ks.size(); ++i) {
    precision[std::to_string(metrics.ks[i])] = metrics.precision[i];
    recall[std::to_string(metrics.ks[i])] = metrics.recall[i];
  }
  out << json{{"index", a.index},
              {"model", std::holds_alternative<PackedEncoder>(model) ? "packed" : "dense"},
              {"corpus", corpus.rows()},
              {"queries", queries.rows()},
              {"precision_at_k", precision},
              {"recall_at_k", recall},
              {"embed_seconds", embed_seconds}}
             .dump()
      << "\n";
  for (std::size_t i = 0; i < metrics.ks.size(); ++i) {
    err << a.index << " P@" << metrics.ks[i] << "=" << std::fixed << std::setprecision(4)
        << metrics.precision[i] << " R@" << metrics.ks[i] << "=" << metrics.recall[i] << "\n";
  }
  return kOk;
}

// --- bench-gemv ------------------------------------------------------------

struct BenchArgs {
  std::size_t rows = 1024;
  std::size_t cols = 1024;
  std::size_t reps = 20;
  std::uint64_t seed = 0;
};

int bench_gemv_cmd(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  const GemvBench b = bench_gemv(a.rows, a.cols, a.reps, resolve_seed(a.seed));
  out << to_json(b.dense) << "\n" << to_json(b.packed) << "\n";
  out << json{{"latency_ratio", b.latency_ratio},
              {"storage_ratio", b.storage_ratio},
              {"plane_ratio", b.plane_ratio},
              {"max_abs_error", b.max_abs_error},
              {"verified", b.verified}}
             .dump()
      << "\n";
  err << a.rows << "x" << a.cols << " dense " << b.dense.per_call_ns << " ns, packed "
      << b.packed.per_call_ns << " ns, ratio " << b.latency_ratio << "\n";
  return b.verified ? kOk : kInternalError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ternkit: ternary weight conversion, distillation and retrieval tools", "ternkit"};
  app.require_subcommand(1);

  GenWeightsArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-weights", "Write a Gaussian f32 weight tensor");
  gen_cmd->add_option("--rows", gen.rows)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--cols", gen.cols)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--sigma", gen.sigma)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--out", gen.out)->required();

  TernarizeArgs tern;
  auto* tern_cmd = app.add_subcommand("ternarize", "Ternarize an f32 weight tensor to a packed layer");
  tern_cmd->add_option("--weights", tern.weights)->required();
  tern_cmd->add_option("--beta", tern.beta, "threshold multiplier")->check(CLI::PositiveNumber);
  tern_cmd->add_flag("--twn", tern.twn, "use the 0.75 TWN multiplier");
  tern_cmd->add_option("--out", tern.out)->required();

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sparsity-sweep", "Sparsity and threshold per beta");
  sweep_cmd->add_option("--weights", sweep.weights)->required();
  sweep_cmd->add_option("--betas", sweep.betas)->required()->delimiter(',');

  MakeTeacherArgs teach;
  auto* teach_cmd = app.add_subcommand("make-teacher", "Train a synthetic teacher and write datasets");
  teach_cmd->add_option("--out-dir", teach.out_dir)->required();
  teach_cmd->add_option("--clusters", teach.task.num_clusters)->check(CLI::Range(2, 1 << 20));
  teach_cmd->add_option("--points", teach.task.num_points)->check(CLI::PositiveNumber);
  teach_cmd->add_option("--teacher-epochs", teach.task.train_epochs)->check(CLI::PositiveNumber);
  teach_cmd->add_option("--corpus", teach.corpus);
  teach_cmd->add_option("--queries", teach.queries);
  teach_cmd->add_option("--distill-points", teach.distill_points);
  teach_cmd->add_option("--input-dim", teach.encoder.input_dim)->check(CLI::PositiveNumber);
  teach_cmd->add_option("--hidden-dim", teach.encoder.hidden_dim)->check(CLI::PositiveNumber);
  teach_cmd->add_option("--output-dim", teach.encoder.output_dim)->check(CLI::PositiveNumber);
  teach_cmd->add_option("--blocks", teach.encoder.num_blocks)->check(CLI::PositiveNumber);
  teach_cmd->add_option("--seed", teach.task.seed);

  DistillArgs dist;
  auto* dist_cmd = app.add_subcommand("distill", "Distill a ternary student from a teacher");
  dist_cmd->add_option("--config", dist.config, "TrainConfig JSON file")->required();
  dist_cmd->add_option("--data", dist.data, "vector dataset")->required();
  dist_cmd->add_option("--teacher", dist.teacher, "teacher checkpoint")->required();
  dist_cmd->add_option("--out", dist.out, "student checkpoint")->required();
  dist_cmd->add_option("--packed-out", dist.packed_out, "also write the packed export");
  dist_cmd->add_option("--log", dist.log, "write the loss log here instead of stdout");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval-retrieval", "Embed, index and score retrieval");
  eval_cmd->add_option("--model", eval.model)->required();
  eval_cmd->add_option("--dataset", eval.dataset, "corpus vectors")->required();
  eval_cmd->add_option("--queries", eval.queries, "query vectors")->required();
  eval_cmd->add_option("--labels", eval.labels, "JSON {corpus: [...], queries: [...]}")->required();
  eval_cmd->add_option("--index", eval.index)
      ->required()
      ->check(CLI::IsMember({"flat", "ivf", "lsh", "hnsw"}));
  eval_cmd->add_option("--k", eval.ks)->delimiter(',');
  eval_cmd->add_option("--seed", eval.seed);

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench-gemv", "Time dense vs packed ternary GEMV");
  bench_cmd->add_option("--rows", bench.rows)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--cols", bench.cols)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--reps", bench.reps)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*gen_cmd) return gen_weights(gen, out);
    if (*tern_cmd) return ternarize_cmd(tern, out, err);
    if (*sweep_cmd) return sparsity_sweep(sweep, out, err);
    if (*teach_cmd) return make_teacher(teach, out, err);
    if (*dist_cmd) return distill_cmd(dist, out, err);
    if (*eval_cmd) return eval_retrieval(eval, out, err);
    if (*bench_cmd) return bench_gemv_cmd(bench, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const io::FormatError& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const IntegrityError& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const ShapeError& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
  return kUsageError;
}

}  // namespace ternkit::cli
