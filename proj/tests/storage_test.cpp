#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>

#include "ternkit/rng.hpp"
#include "ternkit/storage.hpp"

using namespace ternkit;
using namespace ternkit::io;
namespace fs = std::filesystem;

namespace {

class StorageTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ("ternkit_storage_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path path(const std::string& name) const { return dir_ / name; }

  fs::path dir_;
};

using Bytes = std::vector<std::uint8_t>;

PackedTernaryMatrix random_packed(Rng& rng, std::size_t rows, std::size_t cols, bool bias) {
  TernaryMatrix t{rows, cols, std::vector<std::int8_t>(rows * cols), float(rng.uniform())};
  for (auto& v : t.trits) v = static_cast<std::int8_t>(int(rng.uniform_int(3)) - 1);
  std::optional<std::vector<float>> b;
  if (bias) {
    b.emplace(rows);
    for (auto& x : *b) x = float(rng.normal());
  }
  return pack(t, b);
}

ErrorCode decode_error(const Bytes& bytes) {
  try {
    std::size_t offset = 0;
    decode_packed_layer(bytes, offset);
  } catch (const FormatError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::io;
}

void corrupt_byte(const fs::path& p, std::size_t at, std::uint8_t value) {
  auto bytes = read_file(p);
  bytes.at(at) = value;
  write_file(p, bytes);
}

}  // namespace

TEST_F(StorageTest, PackedLayerGoldenBytes) {
  const auto p = pack(TernaryMatrix{2, 2, {1, 0, -1, 1}, 1.5f});
  const Bytes expected{'T', 'P', 'K', 'D', 0x01, 0x00, 0x02, 0x00, 0x00, 0x00, 0x02, 0x00,
                       0x00, 0x00, 0x00, 0x00, 0xC0, 0x3F, 0x00, 0x01, 0x02, 0x00, 0x01};
  EXPECT_EQ(encode_packed_layer(p), expected);
  EXPECT_EQ(expected.size(), storage_bytes(p));
}

TEST_F(StorageTest, TensorGoldenBytes) {
  const Bytes expected{'T', 'E', 'R', 'N', 0x01, 0x00, 0x00, 0x02, 0x01, 0x00, 0x00, 0x00, 0x02,
                       0x00, 0x00, 0x00, 0x00, 0x00, 0x80, 0x3F, 0x00, 0x00, 0x00, 0x40};
  EXPECT_EQ(encode_tensor(TensorContainer::from_matrix(DenseMatrix::from_rows({{1, 2}}))), expected);
}

TEST_F(StorageTest, VectorGoldenBytes) {
  const Bytes expected{0x01, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00,
                       0x00, 0x00, 0x80, 0x3F, 0x00, 0x00, 0x00, 0x40};
  EXPECT_EQ(encode_vectors(DenseMatrix::from_rows({{1, 2}})), expected);
  EXPECT_EQ(decode_vectors(expected), DenseMatrix::from_rows({{1, 2}}));
}

TEST_F(StorageTest, PackedLayerRoundTripIsCanonical) {
  Rng rng(60);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_packed(rng, 1 + rng.uniform_int(20), 1 + rng.uniform_int(70), trial % 2);
    save_packed_layer(path("a.tpkd"), p);
    const auto loaded = load_packed_layer(path("a.tpkd"));
    ASSERT_EQ(loaded, p);
    save_packed_layer(path("b.tpkd"), loaded);
    ASSERT_EQ(read_file(path("a.tpkd")), read_file(path("b.tpkd")));
  }
}

TEST_F(StorageTest, DistinctErrorCodes) {
  Rng rng(61);
  const auto good = encode_packed_layer(random_packed(rng, 3, 10, true));

  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(decode_error(bad_magic), ErrorCode::bad_magic);

  auto bad_version = good;
  bad_version[4] = 9;
  EXPECT_EQ(decode_error(bad_version), ErrorCode::version_mismatch);

  EXPECT_EQ(decode_error(Bytes(good.begin(), good.end() - 1)), ErrorCode::truncated);

  auto padding = good;
  padding[20] |= 0x80;  // second byte of the first plus-plane row holds 6 padding bits
  EXPECT_EQ(decode_error(padding), ErrorCode::invariant_violation);

  auto trailing = good;
  trailing.push_back(0);
  write_file(path("t.tpkd"), trailing);
  try {
    load_packed_layer(path("t.tpkd"));
    FAIL() << "expected trailing-bytes error";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.code(), ErrorCode::invariant_violation);
  }
}

TEST_F(StorageTest, TruncatedFileLeavesNothingBehind) {
  const auto m = DenseMatrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  save_vectors(path("v.vec"), m);
  auto bytes = read_file(path("v.vec"));
  bytes.pop_back();
  write_file(path("v.vec"), bytes);
  try {
    load_vectors(path("v.vec"));
    FAIL() << "expected truncation";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.code(), ErrorCode::truncated);
  }
}

TEST_F(StorageTest, RejectsEmptyInputsAtSave) {
  EXPECT_THROW(save_vectors(path("e.vec"), DenseMatrix()), FormatError);
  EXPECT_THROW(save_tensor(path("e.tern"), TensorContainer{DType::f32, {}, {}}), FormatError);
  EXPECT_THROW(save_tensor(path("e.tern"), TensorContainer{DType::f32, {0, 3}, {}}), FormatError);
  EXPECT_FALSE(fs::exists(path("e.vec")));
}

TEST_F(StorageTest, TensorRoundTrips) {
  Rng rng(62);
  const auto m = gaussian_fill(rng, 7, 5, 1.0f);
  save_tensor(path("m.tern"), TensorContainer::from_matrix(m));
  EXPECT_EQ(load_tensor(path("m.tern")).matrix(), m);
  const auto p = random_packed(rng, 4, 9, false);
  const auto planes = TensorContainer::from_planes(p);
  save_tensor(path("p.tern"), planes);
  const auto back = load_tensor(path("p.tern")).planes();
  EXPECT_EQ(back.plus_plane, p.plus_plane);
  EXPECT_EQ(back.minus_plane, p.minus_plane);
  const Bytes missing_magic{'N', 'O', 'P', 'E'};
  write_file(path("x.tern"), missing_magic);
  EXPECT_THROW(load_tensor(path("x.tern")), FormatError);
}

TEST_F(StorageTest, DenseCheckpointRoundTripIsBitwise) {
  EncoderModel model(EncoderConfig{12, 16, 8, 2, 3});
  model.set_normalize_output(true);
  model.replace_linears(LinearMode::ternary, 1.5f);
  save_checkpoint(path("m.ckpt"), model);
  const auto loaded = std::get<EncoderModel>(load_checkpoint(path("m.ckpt")));
  Rng rng(63);
  const auto x = gaussian_fill(rng, 5, 12, 1.0f);
  EXPECT_EQ(loaded.embed(x), model.embed(x));
  EXPECT_EQ(loaded.config(), model.config());
  EXPECT_TRUE(loaded.normalize_output());
  EXPECT_EQ(loaded.blocks()[1].fc2.beta, 1.5f);
  EXPECT_EQ(fs::file_size(path("m.ckpt")), checkpoint_bytes(model));
  save_checkpoint(path("n.ckpt"), loaded);
  EXPECT_EQ(read_file(path("m.ckpt")), read_file(path("n.ckpt")));
  EXPECT_EQ(read_file(sidecar_path(path("m.ckpt"))), read_file(sidecar_path(path("n.ckpt"))));
}

TEST_F(StorageTest, PackedCheckpointRoundTripIsBitwise) {
  EncoderModel model(EncoderConfig{12, 16, 8, 2, 4});
  model.replace_linears(LinearMode::ternary, 2.0f);
  const auto packed = export_packed(model);
  save_checkpoint(path("p.ckpt"), packed);
  const auto loaded = std::get<PackedEncoder>(load_checkpoint(path("p.ckpt")));
  Rng rng(64);
  const auto x = gaussian_fill(rng, 5, 12, 1.0f);
  EXPECT_EQ(loaded.embed(x), packed.embed(x));
  EXPECT_EQ(fs::file_size(path("p.ckpt")), checkpoint_bytes(packed));
}

TEST_F(StorageTest, CheckpointSidecarAndChecksum) {
  EncoderModel model(EncoderConfig{4, 4, 4, 1, 0});
  save_checkpoint(path("c.ckpt"), model);
  corrupt_byte(path("c.ckpt"), 40, 0x5A);
  try {
    load_checkpoint(path("c.ckpt"));
    FAIL() << "expected checksum error";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.code(), ErrorCode::checksum_mismatch);
  }
  save_checkpoint(path("d.ckpt"), model);
  fs::remove(sidecar_path(path("d.ckpt")));
  try {
    load_checkpoint(path("d.ckpt"));
    FAIL() << "expected config error";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.code(), ErrorCode::config);
  }
}

TEST_F(StorageTest, ConfigJson) {
  const EncoderConfig ec{3, 5, 7, 2, 99};
  EXPECT_EQ(encoder_config_from_json(encoder_config_to_json(ec)), ec);
  EXPECT_THROW(encoder_config_from_json(R"({"input_dim": 3})"), FormatError);
  TrainConfig tc;
  tc.lr_initial = 2e-5;
  tc.seed = 12345678901ULL;
  EXPECT_EQ(train_config_from_json(train_config_to_json(tc)), tc);
  EXPECT_EQ(train_config_from_json(R"({"epochs": 3})").epochs, 3u);
  EXPECT_THROW(train_config_from_json(R"({"epochs": 0})"), FormatError);
  EXPECT_THROW(train_config_from_json(R"({"epochs": -1})"), FormatError);
  EXPECT_THROW(train_config_from_json(R"({"epoch": 2})"), FormatError);
  EXPECT_THROW(train_config_from_json("not json"), FormatError);
}

TEST_F(StorageTest, ExportedCheckpointIsSmall) {
  for (std::size_t hidden : {256u, 512u}) {
    EncoderModel model(EncoderConfig{hidden, hidden, hidden, 2, 0});
    model.replace_linears(LinearMode::ternary, 2.0f);
    const double ratio = double(checkpoint_bytes(export_packed(model))) / checkpoint_bytes(model);
    EXPECT_LE(ratio, 0.10) << hidden;
  }
}
