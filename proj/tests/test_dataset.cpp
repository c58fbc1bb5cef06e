#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "tiq/binary_io.hpp"
#include "tiq/dataset.hpp"

using namespace tiq;

namespace {

StudyConfig small_config() {
  StudyConfig cfg;
  cfg.lumpy = {4.0, 5.0, 3.0, {8, 8}};
  cfg.signal = {3.0, 1.0, {4.0, 4.0}};
  cfg.system = {20.0, 2.0, {8, 8}};
  cfg.noise = {true, 25.0};
  cfg.counts = {10, 6, 6, 12};
  cfg.master_seed = 99;
  return cfg;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / (std::string("tiq_") + name)).string();
}

}  // namespace

TEST_CASE("splits are labeled H0 then H1") {
  const auto ds = generate_split(small_config(), Split::train);
  REQUIRE(ds.size() == 20);
  for (std::size_t i = 0; i < 20; ++i) CHECK(ds.label(i) == (i < 10 ? Hypothesis::absent : Hypothesis::present));
  CHECK(ds.count_of(Hypothesis::present) == 10);
  CHECK(ds.has_targets());
  CHECK(ds.fingerprint() == small_config().fingerprint());
}

TEST_CASE("each sample is a pure function of seed, split and index") {
  auto cfg = small_config();
  const auto a = generate_split(cfg, Split::test);
  cfg.counts.train = 50;  // other split sizes do not matter for the samples themselves
  const auto b = generate_split(cfg, Split::test);
  CHECK(a.image_data() == b.image_data());
  const auto c = generate_split(cfg, Split::validation);
  CHECK(a.image(0)[0] != c.image(0)[0]);
}

TEST_CASE("noise-free split matches the noisy split's targets") {
  const auto cfg = small_config();
  const auto noisy = generate_split(cfg, Split::covariance);
  const auto clean = generate_noiseless(cfg, Split::covariance);
  CHECK_FALSE(clean.has_targets());
  CHECK(clean.image_data() == noisy.target_data());
}

TEST_CASE("low-noise targets keep the inputs and add weaker noise") {
  auto cfg = small_config();
  const auto a = generate_split(cfg, Split::train);
  cfg.target_mode = TargetMode::low_noise;
  const auto b = generate_split(cfg, Split::train);
  CHECK(a.image_data() == b.image_data());
  CHECK(a.target_data() != b.target_data());
}

TEST_CASE("dataset file round trip") {
  const auto ds = generate_split(small_config(), Split::validation);
  const auto path = temp_path("roundtrip.tiqd");
  save_dataset(ds, path);
  const auto back = load_dataset(path);
  CHECK(back.dims() == ds.dims());
  CHECK(back.labels() == ds.labels());
  CHECK(back.image_data() == ds.image_data());
  CHECK(back.target_data() == ds.target_data());
  CHECK(back.fingerprint() == ds.fingerprint());
  std::filesystem::remove(path);
}

TEST_CASE("corrupted or truncated dataset files are rejected") {
  const auto ds = generate_split(small_config(), Split::validation);
  const auto path = temp_path("corrupt.tiqd");
  save_dataset(ds, path);
  auto bytes = read_file(path);
  auto flipped = bytes;
  flipped[40] ^= 0x10;
  write_file(path, flipped);
  CHECK_THROWS_AS(load_dataset(path), FormatError);
  bytes.resize(bytes.size() - 9);
  write_file(path, bytes);
  CHECK_THROWS_AS(load_dataset(path), FormatError);
  std::filesystem::remove(path);
  CHECK_THROWS(save_dataset(Dataset(), path));
}

TEST_CASE("crc32 known value") {
  const std::string s = "123456789";
  CHECK(crc32(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())) == 0xCBF43926u);
}

TEST_CASE("config validation") {
  auto cfg = small_config();
  cfg.lumpy.field = {9, 8};
  CHECK_THROWS(cfg.validate());
  cfg = small_config();
  cfg.counts.test = 0;
  CHECK_THROWS(cfg.validate());
  cfg = small_config();
  cfg.target_mode = TargetMode::low_noise;
  cfg.low_noise_scale = 1.5;
  CHECK_THROWS(cfg.validate());
}
