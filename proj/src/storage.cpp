#include "ternkit/storage.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace ternkit::io {

using nlohmann::json;

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::io: return "io error";
    case ErrorCode::bad_magic: return "bad magic";
    case ErrorCode::version_mismatch: return "version mismatch";
    case ErrorCode::truncated: return "truncated";
    case ErrorCode::invariant_violation: return "invariant violation";
    case ErrorCode::config: return "config error";
    case ErrorCode::checksum_mismatch: return "checksum mismatch";
  }
  return "unknown";
}

namespace {

constexpr char kTensorMagic[4] = {'T', 'E', 'R', 'N'};
constexpr char kPackedMagic[4] = {'T', 'P', 'K', 'D'};

class Writer {
 public:
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void magic(const char (&m)[4]) {
    for (char c : m) out_.push_back(static_cast<std::uint8_t>(c));
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f32s(std::span<const float> values) {
    for (float v : values) f32(v);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::size_t offset) : bytes_(bytes), pos_(offset) {}

  std::size_t position() const { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n || pos_ > bytes_.size()) {
      throw FormatError(ErrorCode::truncated, std::string("not enough bytes for ") + what);
    }
  }
  void magic(const char (&m)[4], const char* what) {
    need(4, what);
    if (std::memcmp(bytes_.data() + pos_, m, 4) != 0) {
      throw FormatError(ErrorCode::bad_magic, std::string("expected ") + what + " magic");
    }
    pos_ += 4;
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    const auto v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::vector<std::uint8_t> raw(std::size_t n, const char* what) {
    need(n, what);
    std::vector<std::uint8_t> out(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }
  std::vector<float> f32s(std::size_t n, const char* what) {
    need(n * 4, what);
    std::vector<float> out(n);
    for (auto& v : out) v = f32(what);
    return out;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
};

void check_version(std::uint16_t version) {
  if (version != kFormatVersion) {
    throw FormatError(ErrorCode::version_mismatch,
                      "version " + std::to_string(version) + ", supported " +
                          std::to_string(kFormatVersion));
  }
}

std::uint32_t to_u32(std::size_t v, const char* what) {
  if (v == 0 || v > UINT32_MAX) {
    throw FormatError(ErrorCode::invariant_violation,
                      std::string(what) + " must be in [1, 2^32), got " + std::to_string(v));
  }
  return static_cast<std::uint32_t>(v);
}

std::size_t payload_size(DType dtype, const std::vector<std::uint32_t>& dims) {
  std::size_t elements = 1;
  for (auto d : dims) elements *= d;
  switch (dtype) {
    case DType::f32: return elements * 4;
    case DType::u8: return elements;
    case DType::trit_planes:
      if (dims.size() != 2) {
        throw FormatError(ErrorCode::invariant_violation, "trit planes must have rank 2");
      }
      return 2 * std::size_t{dims[0]} * ((std::size_t{dims[1]} + 7) / 8);
  }
  throw FormatError(ErrorCode::invariant_violation, "unknown dtype");
}

std::vector<std::uint8_t> float_bytes(std::span<const float> values) {
  Writer w;
  w.f32s(values);
  return w.take();
}

}  // namespace

TensorContainer TensorContainer::from_matrix(const DenseMatrix& m) {
  return {DType::f32, {to_u32(m.rows(), "rows"), to_u32(m.cols(), "cols")}, float_bytes(m.data())};
}

TensorContainer TensorContainer::from_floats(std::span<const float> values) {
  return {DType::f32, {to_u32(values.size(), "length")}, float_bytes(values)};
}

TensorContainer TensorContainer::from_planes(const PackedTernaryMatrix& p) {
  p.validate();
  TensorContainer t{DType::trit_planes, {to_u32(p.rows, "rows"), to_u32(p.cols, "cols")}, {}};
  t.payload = p.plus_plane;
  t.payload.insert(t.payload.end(), p.minus_plane.begin(), p.minus_plane.end());
  return t;
}

std::vector<float> TensorContainer::floats() const {
  if (dtype != DType::f32) throw FormatError(ErrorCode::invariant_violation, "tensor is not f32");
  Reader r(payload, 0);
  return r.f32s(payload.size() / 4, "f32 payload");
}

DenseMatrix TensorContainer::matrix() const {
  if (dims.size() != 2) throw FormatError(ErrorCode::invariant_violation, "tensor is not rank 2");
  return DenseMatrix(dims[0], dims[1], floats());
}

PackedTernaryMatrix TensorContainer::planes() const {
  if (dtype != DType::trit_planes) {
    throw FormatError(ErrorCode::invariant_violation, "tensor is not trit planes");
  }
  PackedTernaryMatrix p;
  p.rows = dims[0];
  p.cols = dims[1];
  const std::size_t plane = p.rows * p.row_bytes();
  p.plus_plane.assign(payload.begin(), payload.begin() + static_cast<std::ptrdiff_t>(plane));
  p.minus_plane.assign(payload.begin() + static_cast<std::ptrdiff_t>(plane), payload.end());
  try {
    p.validate();
  } catch (const IntegrityError& e) {
    throw FormatError(ErrorCode::invariant_violation, e.what());
  }
  return p;
}

std::vector<std::uint8_t> encode_tensor(const TensorContainer& t) {
  if (t.dims.empty() || t.dims.size() > 255) {
    throw FormatError(ErrorCode::invariant_violation, "tensor rank must be in [1, 255]");
  }
  for (auto d : t.dims) {
    if (d == 0) throw FormatError(ErrorCode::invariant_violation, "tensor has a zero dimension");
  }
  if (t.payload.size() != payload_size(t.dtype, t.dims)) {
    throw FormatError(ErrorCode::invariant_violation, "payload length does not match dims");
  }
  Writer w;
  w.magic(kTensorMagic);
  w.u16(kFormatVersion);
  w.u8(static_cast<std::uint8_t>(t.dtype));
  w.u8(static_cast<std::uint8_t>(t.dims.size()));
  for (auto d : t.dims) w.u32(d);
  w.bytes(t.payload);
  return w.take();
}

TensorContainer decode_tensor(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  Reader r(bytes, offset);
  r.magic(kTensorMagic, "TERN");
  check_version(r.u16("version"));
  const std::uint8_t dtype = r.u8("dtype");
  if (dtype > 2) {
    throw FormatError(ErrorCode::invariant_violation, "unknown dtype " + std::to_string(dtype));
  }
  const std::uint8_t rank = r.u8("rank");
  if (rank == 0) throw FormatError(ErrorCode::invariant_violation, "rank 0 tensor");
  TensorContainer t;
  t.dtype = static_cast<DType>(dtype);
  for (std::uint8_t i = 0; i < rank; ++i) {
    t.dims.push_back(r.u32("dims"));
    if (t.dims.back() == 0) throw FormatError(ErrorCode::invariant_violation, "zero dimension");
  }
  t.payload = r.raw(payload_size(t.dtype, t.dims), "payload");
  if (t.dtype == DType::trit_planes) t.planes();  // validates plane invariants
  offset = r.position();
  return t;
}

std::vector<std::uint8_t> encode_packed_layer(const PackedTernaryMatrix& p) {
  try {
    p.validate();
  } catch (const IntegrityError& e) {
    throw FormatError(ErrorCode::invariant_violation, e.what());
  }
  Writer w;
  w.magic(kPackedMagic);
  w.u16(kFormatVersion);
  w.u32(to_u32(p.rows, "rows"));
  w.u32(to_u32(p.cols, "cols"));
  w.f32(p.gamma);
  w.u8(p.bias ? 1 : 0);
  w.bytes(p.plus_plane);
  w.bytes(p.minus_plane);
  if (p.bias) w.f32s(*p.bias);
  return w.take();
}

PackedTernaryMatrix decode_packed_layer(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  Reader r(bytes, offset);
  r.magic(kPackedMagic, "TPKD");
  check_version(r.u16("version"));
  PackedTernaryMatrix p;
  p.rows = r.u32("rows");
  p.cols = r.u32("cols");
  if (p.rows == 0 || p.cols == 0) {
    throw FormatError(ErrorCode::invariant_violation, "zero-sized packed layer");
  }
  p.gamma = r.f32("gamma");
  const std::uint8_t has_bias = r.u8("bias flag");
  if (has_bias > 1) throw FormatError(ErrorCode::invariant_violation, "bias flag must be 0 or 1");
  const std::size_t plane = p.rows * p.row_bytes();
  p.plus_plane = r.raw(plane, "plus plane");
  p.minus_plane = r.raw(plane, "minus plane");
  if (has_bias) p.bias = r.f32s(p.rows, "bias");
  try {
    p.validate();
  } catch (const IntegrityError& e) {
    throw FormatError(ErrorCode::invariant_violation, e.what());
  }
  offset = r.position();
  return p;
}

std::vector<std::uint8_t> encode_vectors(const DenseMatrix& vectors) {
  if (vectors.empty()) throw FormatError(ErrorCode::invariant_violation, "empty vector dataset");
  Writer w;
  w.u32(to_u32(vectors.rows(), "count"));
  w.u32(to_u32(vectors.cols(), "dim"));
  w.f32s(vectors.data());
  return w.take();
}

DenseMatrix decode_vectors(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, 0);
  const std::uint32_t count = r.u32("count");
  const std::uint32_t dim = r.u32("dim");
  if (count == 0 || dim == 0) {
    throw FormatError(ErrorCode::invariant_violation, "vector dataset with zero count or dim");
  }
  const std::size_t expected = 8 + std::size_t{4} * count * dim;
  if (bytes.size() < expected) {
    throw FormatError(ErrorCode::truncated, "vector dataset shorter than its header claims");
  }
  if (bytes.size() > expected) {
    throw FormatError(ErrorCode::invariant_violation, "trailing bytes after vector dataset");
  }
  return DenseMatrix(count, dim, r.f32s(std::size_t{count} * dim, "vectors"));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(ErrorCode::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(ErrorCode::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(ErrorCode::io, "write failed for " + path.string());
}

namespace {

void require_consumed(std::span<const std::uint8_t> bytes, std::size_t offset, const char* what) {
  if (offset != bytes.size()) {
    throw FormatError(ErrorCode::invariant_violation, std::string("trailing bytes after ") + what);
  }
}

}  // namespace

void save_tensor(const std::filesystem::path& path, const TensorContainer& t) {
  write_file(path, encode_tensor(t));
}

TensorContainer load_tensor(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::size_t offset = 0;
  TensorContainer t = decode_tensor(bytes, offset);
  require_consumed(bytes, offset, "tensor");
  return t;
}

void save_packed_layer(const std::filesystem::path& path, const PackedTernaryMatrix& p) {
  write_file(path, encode_packed_layer(p));
}

PackedTernaryMatrix load_packed_layer(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::size_t offset = 0;
  PackedTernaryMatrix p = decode_packed_layer(bytes, offset);
  require_consumed(bytes, offset, "packed layer");
  return p;
}

void save_vectors(const std::filesystem::path& path, const DenseMatrix& vectors) {
  write_file(path, encode_vectors(vectors));
}

DenseMatrix load_vectors(const std::filesystem::path& path) {
  return decode_vectors(read_file(path));
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint) {
  std::filesystem::path p = checkpoint;
  p += ".json";
  return p;
}

namespace {

json config_json(const EncoderConfig& c) {
  return {{"input_dim", c.input_dim},
          {"hidden_dim", c.hidden_dim},
          {"output_dim", c.output_dim},
          {"num_blocks", c.num_blocks},
          {"seed", c.seed}};
}

EncoderConfig config_from(const json& j) {
  static const char* kKeys[] = {"input_dim", "hidden_dim", "output_dim", "num_blocks", "seed"};
  if (!j.is_object()) throw FormatError(ErrorCode::config, "encoder config must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw FormatError(ErrorCode::config, "unknown encoder config key: " + key);
    }
  }
  EncoderConfig c;
  try {
    c.input_dim = j.at("input_dim").get<std::size_t>();
    c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    c.output_dim = j.at("output_dim").get<std::size_t>();
    c.num_blocks = j.at("num_blocks").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
  } catch (const json::exception& e) {
    throw FormatError(ErrorCode::config, e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(ErrorCode::config, e.what());
  }
  return c;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

void write_checkpoint(const std::filesystem::path& path, const std::vector<TensorContainer>& tensors,
                      const std::vector<std::string>& names, json sidecar) {
  std::vector<std::uint8_t> bytes;
  for (const auto& t : tensors) {
    const auto encoded = encode_tensor(t);
    bytes.insert(bytes.end(), encoded.begin(), encoded.end());
  }
  sidecar["format"] = "ternkit-checkpoint";
  sidecar["version"] = kFormatVersion;
  sidecar["tensors"] = names;
  sidecar["bytes"] = bytes.size();
  sidecar["checksum"] = "fnv1a64:" + hex64(fnv1a64(bytes));
  write_file(path, bytes);
  const std::string text = sidecar.dump(2) + "\n";
  write_file(sidecar_path(path),
             std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<TensorContainer> dense_tensors(const EncoderModel& model) {
  std::vector<TensorContainer> out;
  auto linear = [&](const LinearLayer& l) {
    out.push_back(TensorContainer::from_matrix(l.weight));
    out.push_back(TensorContainer::from_floats(l.bias));
  };
  linear(model.input_layer());
  for (const auto& b : model.blocks()) {
    out.push_back(TensorContainer::from_floats(b.norm.gain));
    out.push_back(TensorContainer::from_floats(b.norm.shift));
    linear(b.fc1);
    linear(b.fc2);
  }
  linear(model.output_layer());
  return out;
}

void append_packed(std::vector<TensorContainer>& out, std::vector<std::string>& names,
                   const PackedTernaryMatrix& p, const std::string& name) {
  out.push_back(TensorContainer::from_planes(p));
  names.push_back(name + ".planes");
  const float gamma[1] = {p.gamma};
  out.push_back(TensorContainer::from_floats(gamma));
  names.push_back(name + ".gamma");
  if (!p.bias) throw FormatError(ErrorCode::invariant_violation, name + " has no bias");
  out.push_back(TensorContainer::from_floats(*p.bias));
  names.push_back(name + ".bias");
}

std::vector<TensorContainer> packed_tensors(const PackedEncoder& model,
                                            std::vector<std::string>* names_out) {
  std::vector<TensorContainer> out;
  std::vector<std::string> names;
  append_packed(out, names, model.input, "input");
  for (std::size_t b = 0; b < model.blocks.size(); ++b) {
    const std::string prefix = "blocks." + std::to_string(b) + ".";
    const auto& block = model.blocks[b];
    out.push_back(TensorContainer::from_floats(block.norm.gain));
    names.push_back(prefix + "norm.gain");
    out.push_back(TensorContainer::from_floats(block.norm.shift));
    names.push_back(prefix + "norm.shift");
    append_packed(out, names, block.fc1, prefix + "fc1");
    append_packed(out, names, block.fc2, prefix + "fc2");
  }
  append_packed(out, names, model.output, "output");
  if (names_out) *names_out = std::move(names);
  return out;
}

std::size_t encoded_size(const std::vector<TensorContainer>& tensors) {
  std::size_t total = 0;
  for (const auto& t : tensors) total += 8 + 4 * t.dims.size() + t.payload.size();
  return total;
}

class TensorStream {
 public:
  explicit TensorStream(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  TensorContainer next(const std::string& name) {
    if (offset_ >= bytes_.size()) {
      throw FormatError(ErrorCode::truncated, "checkpoint ends before tensor " + name);
    }
    return decode_tensor(bytes_, offset_);
  }
  std::vector<float> floats(const std::string& name, std::size_t length) {
    TensorContainer t = next(name);
    if (t.dtype != DType::f32 || t.dims.size() != 1 || t.dims[0] != length) {
      throw FormatError(ErrorCode::invariant_violation, name + " has the wrong shape");
    }
    return t.floats();
  }
  DenseMatrix matrix(const std::string& name, std::size_t rows, std::size_t cols) {
    TensorContainer t = next(name);
    if (t.dtype != DType::f32 || t.dims.size() != 2 || t.dims[0] != rows || t.dims[1] != cols) {
      throw FormatError(ErrorCode::invariant_violation, name + " has the wrong shape");
    }
    return t.matrix();
  }
  PackedTernaryMatrix packed(const std::string& name, std::size_t rows, std::size_t cols) {
    TensorContainer t = next(name + ".planes");
    if (t.dtype != DType::trit_planes || t.dims[0] != rows || t.dims[1] != cols) {
      throw FormatError(ErrorCode::invariant_violation, name + " planes have the wrong shape");
    }
    PackedTernaryMatrix p = t.planes();
    p.gamma = floats(name + ".gamma", 1)[0];
    p.bias = floats(name + ".bias", rows);
    return p;
  }
  void finish() const { require_consumed(bytes_, offset_, "checkpoint tensors"); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t offset_ = 0;
};

json read_sidecar(const std::filesystem::path& path) {
  const auto side = sidecar_path(path);
  if (!std::filesystem::exists(side)) {
    throw FormatError(ErrorCode::config, "missing checkpoint sidecar " + side.string());
  }
  const auto bytes = read_file(side);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw FormatError(ErrorCode::config, std::string("malformed sidecar: ") + e.what());
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const EncoderModel& model) {
  json linears = json::array();
  for (const LinearLayer* l : model.linear_layers()) {
    linears.push_back({{"mode", to_string(l->mode)}, {"beta", l->beta}});
  }
  json sidecar{{"kind", "dense"},
               {"config", config_json(model.config())},
               {"normalize_output", model.normalize_output()},
               {"linears", linears}};
  write_checkpoint(path, dense_tensors(model), model.parameter_names(), std::move(sidecar));
}

void save_checkpoint(const std::filesystem::path& path, const PackedEncoder& model) {
  std::vector<std::string> names;
  auto tensors = packed_tensors(model, &names);
  json sidecar{{"kind", "packed"},
               {"config", config_json(model.config)},
               {"normalize_output", model.normalize_output}};
  write_checkpoint(path, tensors, names, std::move(sidecar));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const json sidecar = read_sidecar(path);
  const auto bytes = read_file(path);
  try {
    if (sidecar.at("format") != "ternkit-checkpoint") {
      throw FormatError(ErrorCode::config, "sidecar is not a ternkit checkpoint");
    }
    check_version(sidecar.at("version").get<std::uint16_t>());
    const std::string expected = sidecar.at("checksum").get<std::string>();
    if (expected != "fnv1a64:" + hex64(fnv1a64(bytes))) {
      throw FormatError(ErrorCode::checksum_mismatch, path.string());
    }
    const EncoderConfig config = config_from(sidecar.at("config"));
    const bool normalize = sidecar.at("normalize_output").get<bool>();
    const std::string kind = sidecar.at("kind").get<std::string>();
    const std::size_t in = config.input_dim, hid = config.hidden_dim, out = config.output_dim;
    TensorStream stream(bytes);

    if (kind == "dense") {
      EncoderModel model(config);
      model.set_normalize_output(normalize);
      const auto& linears = sidecar.at("linears");
      if (linears.size() != model.linear_layers().size()) {
        throw FormatError(ErrorCode::config, "sidecar linear count does not match config");
      }
      std::size_t li = 0;
      auto read_linear = [&](LinearLayer& l, const std::string& name, std::size_t rows,
                             std::size_t cols) {
        l.weight = stream.matrix(name + ".weight", rows, cols);
        l.bias = stream.floats(name + ".bias", rows);
        l.mode = linear_mode_from_string(linears.at(li).at("mode").get<std::string>());
        l.beta = linears.at(li).at("beta").get<float>();
        ++li;
      };
      read_linear(model.input_layer(), "input", hid, in);
      for (std::size_t b = 0; b < model.blocks().size(); ++b) {
        auto& block = model.blocks()[b];
        const std::string prefix = "blocks." + std::to_string(b) + ".";
        block.norm.gain = stream.floats(prefix + "norm.gain", hid);
        block.norm.shift = stream.floats(prefix + "norm.shift", hid);
        read_linear(block.fc1, prefix + "fc1", hid, hid);
        read_linear(block.fc2, prefix + "fc2", hid, hid);
      }
      read_linear(model.output_layer(), "output", out, hid);
      stream.finish();
      return model;
    }
    if (kind == "packed") {
      PackedEncoder model;
      model.config = config;
      model.normalize_output = normalize;
      model.input = stream.packed("input", hid, in);
      for (std::size_t b = 0; b < config.num_blocks; ++b) {
        const std::string prefix = "blocks." + std::to_string(b) + ".";
        PackedBlock block;
        block.norm.gain = stream.floats(prefix + "norm.gain", hid);
        block.norm.shift = stream.floats(prefix + "norm.shift", hid);
        block.fc1 = stream.packed(prefix + "fc1", hid, hid);
        block.fc2 = stream.packed(prefix + "fc2", hid, hid);
        model.blocks.push_back(std::move(block));
      }
      model.output = stream.packed("output", out, hid);
      stream.finish();
      return model;
    }
    throw FormatError(ErrorCode::config, "unknown checkpoint kind: " + kind);
  } catch (const json::exception& e) {
    throw FormatError(ErrorCode::config, std::string("sidecar: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(ErrorCode::config, e.what());
  }
}

std::size_t checkpoint_bytes(const EncoderModel& model) {
  return encoded_size(dense_tensors(model));
}

std::size_t checkpoint_bytes(const PackedEncoder& model) {
  return encoded_size(packed_tensors(model, nullptr));
}

std::string encoder_config_to_json(const EncoderConfig& config) {
  return config_json(config).dump(2);
}

EncoderConfig encoder_config_from_json(const std::string& text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::exception& e) {
    throw FormatError(ErrorCode::config, e.what());
  }
}

std::string train_config_to_json(const TrainConfig& c) {
  return json{{"beta", c.beta},
              {"epochs", c.epochs},
              {"lr_initial", c.lr_initial},
              {"lr_step_epochs", c.lr_step_epochs},
              {"lr_factor", c.lr_factor},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"batch_size", c.batch_size},
              {"seed", c.seed}}
      .dump(2);
}

TrainConfig train_config_from_json(const std::string& text) {
  TrainConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw FormatError(ErrorCode::config, "train config must be an object");
    auto count = [](const json& v, const std::string& key) {
      if (!v.is_number_unsigned()) {
        throw FormatError(ErrorCode::config, key + " must be a non-negative integer");
      }
      return v.get<std::uint64_t>();
    };
    for (const auto& [key, value] : j.items()) {
      if (key == "beta") c.beta = value.get<float>();
      else if (key == "epochs") c.epochs = count(value, key);
      else if (key == "lr_initial") c.lr_initial = value.get<double>();
      else if (key == "lr_step_epochs") c.lr_step_epochs = count(value, key);
      else if (key == "lr_factor") c.lr_factor = value.get<double>();
      else if (key == "adam_beta1") c.adam_beta1 = value.get<double>();
      else if (key == "adam_beta2") c.adam_beta2 = value.get<double>();
      else if (key == "adam_eps") c.adam_eps = value.get<double>();
      else if (key == "batch_size") c.batch_size = count(value, key);
      else if (key == "seed") c.seed = count(value, key);
      else throw FormatError(ErrorCode::config, "unknown train config key: " + key);
    }
    c.validate();
  } catch (const json::exception& e) {
    throw FormatError(ErrorCode::config, e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(ErrorCode::config, e.what());
  }
  return c;
}

}  // namespace ternkit::io
