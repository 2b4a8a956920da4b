#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ternkit/distiller.hpp"
#include "ternkit/encoder.hpp"
#include "ternkit/packed.hpp"
#include "ternkit/tensor.hpp"

// On-disk formats. All integers and floats are little-endian.
//
// TensorContainer:  "TERN" | version u16 | dtype u8 | rank u8 | dims u32[rank] | payload
//   dtype 0 = f32 (4 bytes per element), 1 = trit planes (rank 2, plus plane
//   then minus plane, rows * ceil(cols/8) bytes each), 2 = u8.
// PackedLayerRecord: "TPKD" | version u16 | rows u32 | cols u32 | gamma f32 |
//   bias flag u8 | plus plane | minus plane | bias f32[rows] if flag == 1
// VectorDataset:    count u32 | dim u32 | count*dim f32
// Checkpoint:       binary file of concatenated TensorContainers plus a JSON
//   sidecar at "<path>.json" holding the config, tensor names and an
//   FNV-1a 64 checksum of the binary file.
namespace ternkit::io {

inline constexpr std::uint16_t kFormatVersion = 1;

enum class ErrorCode {
  io = 1,
  bad_magic,
  version_mismatch,
  truncated,
  invariant_violation,
  config,
  checksum_mismatch,
};

const char* to_string(ErrorCode code);

class FormatError : public std::runtime_error {
 public:
  FormatError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

enum class DType : std::uint8_t { f32 = 0, trit_planes = 1, u8 = 2 };

struct TensorContainer {
  DType dtype = DType::f32;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> payload;

  static TensorContainer from_matrix(const DenseMatrix& m);
  static TensorContainer from_floats(std::span<const float> values);
  static TensorContainer from_planes(const PackedTernaryMatrix& p);

  std::vector<float> floats() const;
  DenseMatrix matrix() const;
  // Plane payload as a packed matrix (gamma 0, no bias), validated.
  PackedTernaryMatrix planes() const;

  friend bool operator==(const TensorContainer&, const TensorContainer&) = default;
};

std::vector<std::uint8_t> encode_tensor(const TensorContainer& t);
// Decodes one container starting at `offset` and advances it.
TensorContainer decode_tensor(std::span<const std::uint8_t> bytes, std::size_t& offset);

std::vector<std::uint8_t> encode_packed_layer(const PackedTernaryMatrix& p);
PackedTernaryMatrix decode_packed_layer(std::span<const std::uint8_t> bytes, std::size_t& offset);

std::vector<std::uint8_t> encode_vectors(const DenseMatrix& vectors);
DenseMatrix decode_vectors(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

void save_tensor(const std::filesystem::path& path, const TensorContainer& t);
TensorContainer load_tensor(const std::filesystem::path& path);

void save_packed_layer(const std::filesystem::path& path, const PackedTernaryMatrix& p);
PackedTernaryMatrix load_packed_layer(const std::filesystem::path& path);

void save_vectors(const std::filesystem::path& path, const DenseMatrix& vectors);
DenseMatrix load_vectors(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint);

// Full-precision or ternary-training checkpoint: every parameter as f32.
void save_checkpoint(const std::filesystem::path& path, const EncoderModel& model);
// Exported ternary checkpoint: linears as trit planes + gamma + bias.
void save_checkpoint(const std::filesystem::path& path, const PackedEncoder& model);

using Checkpoint = std::variant<EncoderModel, PackedEncoder>;

Checkpoint load_checkpoint(const std::filesystem::path& path);

// Byte size of the binary part of a checkpoint.
std::size_t checkpoint_bytes(const EncoderModel& model);
std::size_t checkpoint_bytes(const PackedEncoder& model);

// JSON documents for configs. Unknown keys are rejected; missing TrainConfig
// keys keep their defaults.
std::string encoder_config_to_json(const EncoderConfig& config);
EncoderConfig encoder_config_from_json(const std::string& text);
std::string train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& text);

}  // namespace ternkit::io
