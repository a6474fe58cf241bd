// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

#include "bindscore/bundle.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "support/fixtures.hpp"

namespace bindscore {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class BundleTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("bindscore_bundle_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  json manifest(const fs::path& dir) const {
    std::ifstream in(dir / bundle::kManifestName);
    return json::parse(in);
  }
  void rewrite(const fs::path& dir, const std::function<void(json&)>& edit) const {
    json m = manifest(dir);
    edit(m);
    std::ofstream(dir / bundle::kManifestName) << m.dump();
  }

  fs::path dir_;
};

Matrix as_float(const Matrix& m) { return m.cast<float>().cast<double>(); }

TEST_F(BundleTest, ImagesRoundTrip) {
  std::mt19937_64 rng(41);
  std::vector<ImageEmbedding> images;
  for (int i = 0; i < 5; ++i) {
    const Matrix patches = as_float(fixture::random_rows(rng, 6, 7));
    const Vector cls = as_float(fixture::random_rows(rng, 1, 7)).row(0).transpose();
    std::optional<PatchGrid> grid;
    if (i % 2 == 0) grid = PatchGrid{2, 3};
    images.emplace_back("img" + std::to_string(i), cls, patches, grid);
  }
  bundle::write_images(dir_, images, {{"exporter", {{"model", "x"}}}});
  const auto back = bundle::read_images(dir_);
  ASSERT_EQ(back.size(), images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    EXPECT_EQ(back[i].id(), images[i].id());
    EXPECT_EQ(back[i].cls(), images[i].cls());
    EXPECT_EQ(back[i].patches(), images[i].patches());
    EXPECT_EQ(back[i].grid().has_value(), images[i].grid().has_value());
  }
  EXPECT_EQ(manifest(dir_)["exporter"]["model"], "x");
}

TEST_F(BundleTest, TextsRoundTrip) {
  std::mt19937_64 rng(42);
  const auto a = fixture::toy_text();
  const auto b = fixture::plain_text("p", as_float(fixture::random_rows(rng, 5, 2)), fixture::vec({1, 0.5}));
  const std::vector<TextEncoding> texts{a, b};
  bundle::write_texts(dir_, texts);
  const auto back = bundle::index_texts(bundle::read_texts(dir_));
  ASSERT_EQ(back.size(), 2u);
  for (const auto& t : texts) {
    const auto& r = back.at(t.id());
    EXPECT_EQ(r.caption(), t.caption());
    EXPECT_EQ(r.tokens(), t.tokens());
    EXPECT_EQ(r.eot(), t.eot());
    EXPECT_EQ(r.token_texts(), t.token_texts());
    EXPECT_EQ(r.content_mask(), t.content_mask());
    ASSERT_EQ(r.char_spans().size(), t.char_spans().size());
    for (std::size_t i = 0; i < t.char_spans().size(); ++i) {
      EXPECT_EQ(r.char_spans()[i].begin, t.char_spans()[i].begin);
      EXPECT_EQ(r.char_spans()[i].end, t.char_spans()[i].end);
    }
  }
}

TEST_F(BundleTest, PoolAndPhrasesRoundTrip) {
  bundle::write_concept_pool(dir_ / "pool", fixture::toy_pool());
  bundle::write_phrase_table(dir_ / "phrases", fixture::toy_table());
  const auto pool = bundle::read_concept_pool(dir_ / "pool");
  EXPECT_EQ(pool.concepts(), fixture::toy_pool().concepts());
  EXPECT_EQ(pool.base_embeddings(), fixture::toy_pool().base_embeddings());
  const auto table = bundle::read_phrase_table(dir_ / "phrases");
  EXPECT_EQ(table.entries(), fixture::toy_table().entries());
}

TEST_F(BundleTest, NullAttributeItemsAreSkipped) {
  bundle::write_phrase_table(dir_, fixture::toy_table());
  rewrite(dir_, [](json& m) {
    json extra = m["items"][0];
    extra["attribute"] = nullptr;
    m["items"].push_back(extra);
  });
  EXPECT_EQ(bundle::read_phrase_table(dir_).size(), 2u);
}

TEST_F(BundleTest, ManifestErrors) {
  const std::vector<ImageEmbedding> images{fixture::toy_image()};
  const std::vector<std::function<void(json&)>> edits = {
      [](json& m) { m["format_version"] = 2; },
      [](json& m) { m["kind"] = "text"; },
      [](json& m) { m["dtype"] = "f16le"; },
      [](json& m) { m["dim"] = 3; },
      [](json& m) { m["items"][0]["n_patches"] = 3; },
      [](json& m) { m["items"][0]["patches"]["byte_offset"] = 1000; },
      [](json& m) { m["items"][0]["patches"]["file"] = "../data.bin"; },
      [](json& m) { m["items"][0]["patches"]["file"] = "/etc/passwd"; },
      [](json& m) { m["items"][0]["patches"]["file"] = "missing.bin"; },
      [](json& m) { m["items"].push_back(m["items"][0]); },
      [](json& m) { m["items"][0].erase("cls"); },
      [](json& m) { m["items"][0]["patch_grid"] = {3, 3}; },
  };
  for (std::size_t i = 0; i < edits.size(); ++i) {
    fs::remove_all(dir_);
    bundle::write_images(dir_, images);
    rewrite(dir_, edits[i]);
    EXPECT_ANY_THROW(bundle::read_images(dir_)) << "edit " << i;
  }
  fs::remove_all(dir_);
  bundle::write_images(dir_, images);
  rewrite(dir_, [](json& m) { m["kind"] = "text"; });
  EXPECT_THROW(bundle::read_images(dir_), FormatError);
  EXPECT_THROW(bundle::read_images(dir_ / "nowhere"), FormatError);
}

TEST_F(BundleTest, ZeroAndNonFiniteVectorsAreRejected) {
  bundle::write_images(dir_, std::vector<ImageEmbedding>{fixture::toy_image()});
  {
    std::fstream f(dir_ / bundle::kDefaultBlob, std::ios::in | std::ios::out | std::ios::binary);
    const float zero[2] = {0.0f, 0.0f};
    f.seekp(0);  // cls is written first
    f.write(reinterpret_cast<const char*>(zero), sizeof zero);
  }
  try {
    bundle::read_images(dir_);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_THAT(e.what(), ::testing::HasSubstr("zero-norm"));
  }
  {
    std::fstream f(dir_ / bundle::kDefaultBlob, std::ios::in | std::ios::out | std::ios::binary);
    const float nan = std::numeric_limits<float>::quiet_NaN();
    f.seekp(0);
    f.write(reinterpret_cast<const char*>(&nan), sizeof nan);
  }
  EXPECT_THROW(bundle::read_images(dir_), FormatError);
}

TEST_F(BundleTest, TextMetadataMismatch) {
  bundle::write_texts(dir_, std::vector<TextEncoding>{fixture::toy_text()});
  rewrite(dir_, [](json& m) { m["items"][0]["content_mask"] = {true, true}; });
  EXPECT_THROW(bundle::read_texts(dir_), FormatError);
}

}  // namespace
}  // namespace bindscore
