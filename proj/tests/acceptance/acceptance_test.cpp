// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Each criterion also has a wall-clock budget.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "oracles.hpp"
#include "ternkit/ann/evaluate.hpp"
#include "ternkit/ann/flat.hpp"
#include "ternkit/distiller.hpp"
#include "ternkit/packed.hpp"
#include "ternkit/storage.hpp"
#include "ternkit/synthetic.hpp"
#include "ternkit/ternarizer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ternkit;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

// Shared by the distillation and retrieval criteria.
struct DeskRun {
  SyntheticTeacher teacher;
  DistillResult distilled;
  LabeledPoints corpus;
  LabeledPoints queries;
};

std::optional<DeskRun> g_desk;

TrainConfig desk_train_config() {
  const auto bytes = io::read_file(fs::path(TERNKIT_CONFIG_DIR) / "desk.json");
  return io::train_config_from_json(std::string(bytes.begin(), bytes.end()));
}

DeskRun& desk_run() {
  if (!g_desk) {
    const EncoderConfig config{64, 64, 64, 4, 7};
    SyntheticTaskSpec spec;
    SyntheticTeacher st = make_synthetic_teacher(config, spec);
    Rng rng = Rng(spec.seed).fork(100);
    const LabeledPoints distill_set = st.task.sample(10000, rng);
    const LabeledPoints corpus = st.task.sample(5000, rng);
    const LabeledPoints queries = st.task.sample(200, rng);
    const TrainConfig train = desk_train_config();
    DistillResult result =
        distill(st.teacher, make_student(st.teacher, train.beta), distill_set.points, train);
    g_desk.emplace(DeskRun{std::move(st), std::move(result), corpus, queries});
  }
  return *g_desk;
}

struct CommandResult {
  int code;
  std::string out;
};

CommandResult run_command(const std::string& args, const fs::path& cwd = {}) {
  std::string cmd = std::string(TERNKIT_CLI_PATH) + " " + args + " 2>/dev/null";
  if (!cwd.empty()) cmd = "cd '" + cwd.string() + "' && " + cmd;
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  if (!pipe) return {-1, ""};
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe.get())) out.append(buf, n);
  const int status = pclose(pipe.release());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::vector<json> json_lines(const std::string& text) {
  std::vector<json> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(json::parse(line));
  }
  return lines;
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("ternkit_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// --- criteria ----------------------------------------------------------------

Outcome ternarize_oracle() {
  Rng rng(1001);
  const float betas[] = {0.5f, 0.75f, 1.0f, 2.0f, 3.0f};
  std::size_t mismatches = 0;
  double worst_gamma = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t rows = 1 + rng.uniform_int(128);
    const std::size_t cols = 1 + rng.uniform_int(96);
    const auto w = gaussian_fill(rng, rows, cols, float(0.05 + rng.uniform()));
    const float beta = betas[trial % 5];
    const float gamma = compute_threshold(w, beta);
    const double ref = oracle::naive_threshold(w, beta);
    worst_gamma = std::max(worst_gamma, std::fabs(gamma - ref) / std::max(ref, 1e-30));
    const auto t = ternarize(w, gamma);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        mismatches += t.at(r, c) != oracle::three_branch(w(r, c), gamma);
      }
    }
  }
  return {mismatches == 0 && worst_gamma < 1e-6,
          "1000 matrices, " + std::to_string(mismatches) + " trit mismatches, worst threshold rel err " +
              fmt(worst_gamma, 3)};
}

Outcome packed_kernel() {
  Rng rng(1002);
  double worst = 0.0;
  std::size_t ragged = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t rows = 1 + rng.uniform_int(64);
    const std::size_t cols = 1 + rng.uniform_int(300);
    ragged += cols % 8 != 0;
    const auto w = gaussian_fill(rng, rows, cols, 1.0f);
    const auto t = ternarize(w, compute_threshold(w, trial % 2 ? 2.0f : 0.75f));
    std::optional<std::vector<float>> bias;
    if (trial % 3 == 0) {
      bias.emplace(rows);
      for (auto& b : *bias) b = float(rng.normal());
    }
    std::vector<float> x(cols);
    for (auto& v : x) v = float(rng.normal());
    const auto y = packed_gemv(pack(t, bias), x);
    for (std::size_t r = 0; r < rows; ++r) {
      double ref = bias ? (*bias)[r] : 0.0;
      for (std::size_t c = 0; c < cols; ++c) ref += double(t.gamma) * t.at(r, c) * x[c];
      worst = std::max(worst, oracle::relative_error(y[r], ref));
    }
  }
  return {worst <= 1e-5, "500 cases (" + std::to_string(ragged) + " with cols not divisible by 8), worst rel err " +
                             fmt(worst, 3)};
}

Outcome gaussian_sparsity() {
  Rng rng(1003);
  const auto w = gaussian_fill(rng, 1000, 1000, 1.0f);
  bool pass = true;
  std::string detail;
  double previous = -1.0;
  for (float beta : {0.75f, 1.0f, 2.0f, 3.0f}) {
    const double s = sparsity(ternarize(w, compute_threshold(w, beta)));
    const double expected = oracle::gaussian_sparsity(beta);
    pass &= std::fabs(s - expected) <= 0.005;
    pass &= s > previous;
    previous = s;
    detail += "beta " + fmt(beta) + ": " + fmt(s) + " (oracle " + fmt(expected) + ") ";
  }
  return {pass, detail};
}

Outcome gradients() {
  EncoderModel model(EncoderConfig{8, 8, 8, 2, 3});
  Rng rng(1004);
  const auto x = gaussian_fill(rng, 4, 8, 1.0f);
  const auto target = gaussian_fill(rng, 4, 8, 0.3f);
  const auto grads = model.backward(mse_loss(model.forward(x), target).grad);
  const auto analytic = grads.flat();
  auto params = model.parameters();
  const float h = 1e-3f;
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

  LinearLayer layer{DenseMatrix::from_rows({{3, -1}, {2, 0}}), {0, 0}, LinearMode::ternary, 1.0f};
  const auto input = DenseMatrix::from_rows({{1, 1}});
  LinearGradients g;
  linear_backward(layer, input, DenseMatrix::from_rows({{1, 1}}), g);
  bool ste_exact = true;
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 2; ++c) ste_exact &= g.weight(r, c) == 1.5f * input(0, c);
  }
  return {worst <= 1e-3 && ste_exact,
          "worst per-tensor rel err " + fmt(worst, 3) + ", STE single layer " +
              (ste_exact ? "exact" : "MISMATCH")};
}

Outcome distillation_gain() {
  const auto& run = desk_run();
  const double ptq = run.distilled.initial_heldout_mse;
  const double final_mse = run.distilled.epochs.back().heldout_mse;
  bool finite = true;
  for (const auto& b : run.distilled.batches) finite &= std::isfinite(b.loss);
  return {finite && final_mse <= 0.5 * ptq,
          "PTQ-only held-out MSE " + fmt(ptq, 5) + ", after 5 epochs " + fmt(final_mse, 5) +
              " (ratio " + fmt(final_mse / ptq, 3) + ")"};
}

Outcome retrieval_parity() {
  const auto& run = desk_run();
  const PackedEncoder student = export_packed(run.distilled.student);
  const auto relevant = ann::relevant_by_label(run.corpus.labels, run.queries.labels);
  const std::size_t ks[] = {1, 10};
  const auto embed_t = [&](const DenseMatrix& x) { return l2_normalize_rows(run.teacher.teacher.embed(x)); };
  const auto embed_s = [&](const DenseMatrix& x) { return l2_normalize_rows(student.embed(x)); };
  const auto teacher_corpus = embed_t(run.corpus.points), teacher_queries = embed_t(run.queries.points);
  const auto student_corpus = embed_s(run.corpus.points), student_queries = embed_s(run.queries.points);
  bool pass = true;
  std::string detail;
  for (auto kind : {ann::IndexKind::flat, ann::IndexKind::ivf, ann::IndexKind::lsh, ann::IndexKind::hnsw}) {
    const auto settings = ann::default_index_settings(5000, 64, 0);
    const auto t = ann::evaluate_retrieval(
        ann::AnnIndex::build(kind, ann::VectorStore(teacher_corpus), settings), teacher_queries, relevant, ks);
    const auto s = ann::evaluate_retrieval(
        ann::AnnIndex::build(kind, ann::VectorStore(student_corpus), settings), student_queries, relevant, ks);
    pass &= s.recall[1] >= 0.9 * t.recall[1];
    detail += std::string(ann::to_string(kind)) + " R@10 " + fmt(s.recall[1]) + "/" + fmt(t.recall[1]) +
              " P@1 " + fmt(s.precision[0]) + "/" + fmt(t.precision[0]) + "; ";
  }
  return {pass, "student/teacher " + detail};
}

Outcome index_correctness() {
  Rng rng(1007);
  const auto corpus = gaussian_fill(rng, 2000, 32, 1.0f);
  const auto queries = gaussian_fill(rng, 200, 32, 1.0f);
  const ann::VectorStore store(corpus);

  std::size_t flat_mismatch = 0;
  for (std::size_t q = 0; q < 50; ++q) {
    std::vector<std::pair<float, std::uint32_t>> all;
    for (std::size_t i = 0; i < corpus.rows(); ++i) {
      float d = 0.0f;
      for (std::size_t j = 0; j < 32; ++j) {
        const float diff = corpus(i, j) - queries(q, j);
        d += diff * diff;
      }
      all.emplace_back(d, std::uint32_t(i));
    }
    std::sort(all.begin(), all.end());
    const auto got = ann::flat_search(store, queries.row(q), 10);
    for (std::size_t i = 0; i < 10; ++i) flat_mismatch += got[i].id != all[i].second;
  }

  std::size_t ivf_mismatch = 0;
  for (std::size_t nlist : {1u, 16u, 45u}) {
    const auto ivf = ann::IvfIndex::build(store, ann::IvfParams{nlist, nlist, 10, 0});
    for (std::size_t q = 0; q < queries.rows(); ++q) {
      ivf_mismatch += ivf.search(queries.row(q), 10) != ann::flat_search(store, queries.row(q), 10);
    }
  }

  ann::HnswParams hp;  // M 16, ef_construction 200, ef_search 128
  const auto hnsw = ann::HnswIndex::build(store, hp);
  double recall = 0.0;
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    const auto exact = ann::ids_of(ann::flat_search(store, queries.row(q), 10));
    const ann::RelevantSet rel(exact.begin(), exact.end());
    recall += ann::recall_at_k(ann::ids_of(hnsw.search(queries.row(q), 10)), rel, 10);
  }
  recall /= double(queries.rows());
  return {flat_mismatch == 0 && ivf_mismatch == 0 && recall >= 0.9,
          "flat vs naive mismatches " + std::to_string(flat_mismatch) + ", IVF exhaustive mismatches " +
              std::to_string(ivf_mismatch) + ", HNSW recall@10 " + fmt(recall)};
}

Outcome storage_ratios() {
  bool pass = true;
  std::string detail;
  for (std::size_t hidden : {256u, 512u, 1024u}) {
    EncoderModel model(EncoderConfig{hidden, hidden, hidden, 2, 0});
    model.replace_linears(LinearMode::ternary, 2.0f);
    const double ratio = double(io::checkpoint_bytes(export_packed(model))) / double(io::checkpoint_bytes(model));
    pass &= ratio <= 0.10;
    detail += "ckpt " + std::to_string(hidden) + ": " + fmt(ratio, 4) + "; ";
  }
  for (std::size_t n : {256u, 1024u, 4096u}) {
    const TernaryMatrix t{n, n, std::vector<std::int8_t>(n * n, 0), 1.0f};
    const auto p = pack(t);
    const double ratio = double(p.plus_plane.size() + p.minus_plane.size()) / (4.0 * n * n);
    pass &= ratio <= 0.07;
    detail += "planes " + std::to_string(n) + ": " + fmt(ratio, 4) + "; ";
  }
  return {pass, detail};
}

Outcome latency_report() {
  bool pass = true;
  std::string detail;
  for (const char* shape : {"1024", "4096"}) {
    const auto r = run_command(std::string("bench-gemv --rows ") + shape + " --cols " + shape + " --reps 10");
    const auto lines = json_lines(r.out);
    if (r.code != 0 || lines.size() != 3) return {false, "bench-gemv failed at " + std::string(shape)};
    const bool verified = lines[2]["verified"].get<bool>();
    pass &= verified && lines[0]["per_call_ns"].get<double>() > 0 && lines[1]["per_call_ns"].get<double>() > 0;
    detail += std::string(shape) + "^2: dense " + fmt(lines[0]["per_call_ns"].get<double>() / 1e3, 4) +
              " us, packed " + fmt(lines[1]["per_call_ns"].get<double>() / 1e3, 4) + " us, ratio " +
              fmt(lines[2]["latency_ratio"].get<double>(), 3) + ", storage " +
              fmt(lines[2]["storage_ratio"].get<double>(), 4) + (verified ? ", verified; " : ", NOT verified; ");
  }
  return {pass, detail};
}

std::string strip_timing(const std::string& text) {
  std::string out;
  for (auto j : json_lines(text)) {
    j.erase("embed_seconds");
    out += j.dump() + "\n";
  }
  return out;
}

Outcome determinism() {
  const fs::path base = scratch_dir() / "determinism";
  std::vector<std::string> differences;
  std::vector<std::string> failures;
  // Each pass runs in its own directory with relative paths so stdout can be compared.
  const auto run_twice = [&](const std::string& label, const std::string& args,
                             const std::vector<std::string>& files) {
    std::string outs[2];
    for (int i = 0; i < 2; ++i) {
      const fs::path dir = base / std::to_string(i);
      fs::create_directories(dir);
      const auto r = run_command(args, dir);
      if (r.code != 0) failures.push_back(label);
      outs[i] = strip_timing(r.out);
    }
    if (outs[0] != outs[1]) differences.push_back(label + " stdout");
    for (const auto& f : files) {
      if (io::read_file(base / "0" / f) != io::read_file(base / "1" / f)) differences.push_back(label + " " + f);
    }
  };
  const std::string desk = (fs::path(TERNKIT_CONFIG_DIR) / "desk.json").string();
  run_twice("gen-weights", "gen-weights --rows 256 --cols 200 --seed 9 --out w.tern", {"w.tern"});
  run_twice("ternarize", "ternarize --weights w.tern --out w.tpkd", {"w.tpkd"});
  run_twice("sparsity-sweep", "sparsity-sweep --weights w.tern --betas 0.5,1,2,3", {});
  run_twice("make-teacher", "make-teacher --out-dir data",
            {"data/teacher.ckpt", "data/teacher.ckpt.json", "data/distill.vec", "data/corpus.vec",
             "data/queries.vec", "data/labels.json"});
  run_twice("distill",
            "distill --config '" + desk +
                "' --data data/distill.vec --teacher data/teacher.ckpt --out student.ckpt"
                " --packed-out student.pkd --log loss.jsonl",
            {"student.ckpt", "student.ckpt.json", "student.pkd", "student.pkd.json", "loss.jsonl"});
  for (const char* index : {"flat", "ivf", "lsh", "hnsw"}) {
    run_twice(std::string("eval-retrieval ") + index,
              std::string("eval-retrieval --model student.pkd --dataset data/corpus.vec --queries data/queries.vec"
                          " --labels data/labels.json --k 1,10 --index ") + index,
              {});
  }
  std::string detail = "9 commands run twice";
  for (const auto& f : failures) detail += "; failed: " + f;
  for (const auto& d : differences) detail += "; differs: " + d;
  return {failures.empty() && differences.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"ternarize-oracle", 10, ternarize_oracle},
      {"packed-kernel-equivalence", 10, packed_kernel},
      {"gaussian-sparsity", 30, gaussian_sparsity},
      {"gradient-correctness", 60, gradients},
      {"distillation-gain", 300, distillation_gain},
      {"retrieval-parity", 300, retrieval_parity},
      {"index-correctness", 120, index_correctness},
      {"storage-ratios", 10, storage_ratios},
      {"latency-report", 600, latency_report},
      {"determinism", 600, determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = seconds <= c.budget_seconds;
    const bool pass = outcome.pass && in_budget;
    failed += !pass;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << std::setw(2) << std::setfill('0') << i + 1 << std::setfill(' ')
              << " " << c.name << ": " << outcome.detail << " (" << fmt(seconds, 3) << " s, budget "
              << c.budget_seconds << " s" << (in_budget ? "" : ", OVER BUDGET") << ")" << std::endl;
  }
  std::error_code ec;
  fs::remove_all(scratch_dir(), ec);
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << std::endl;
  return failed ? 1 : 0;
}
