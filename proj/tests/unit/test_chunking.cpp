#include <gtest/gtest.h>

#include "ctxspot/chunking.hpp"
#include "ctxspot/config.hpp"
#include "test_support.hpp"

namespace ctxspot {
namespace {

FeatureSequence ramp_features(const std::string& id, int frames, int dim) {
  FeatureSequence f;
  f.video_id = id;
  f.values.resize(frames, dim);
  for (int t = 0; t < frames; ++t) f.values.row(t).setConstant(static_cast<float>(t + 1));
  return f;
}

TEST(Chunking, ThreeActionsThreeClassesGiveFourChunks) {
  const SpottingConfig cfg = default_config();
  const auto ann = testing::make_annotations("v", 1000, {{0, 300}, {1, 500}, {2, 700}});
  const auto feats = ramp_features("v", 1000, 16);
  std::mt19937_64 rng(1);
  const auto chunks = sample_chunks(ann, feats, cfg, rng);
  ASSERT_EQ(chunks.size(), 4u);
  int background = 0;
  for (const auto& c : chunks) background += c.is_background() ? 1 : 0;
  EXPECT_EQ(background, 1);
}

TEST(Chunking, NoActionsNoChunks) {
  const SpottingConfig cfg = default_config();
  std::mt19937_64 rng(1);
  EXPECT_TRUE(sample_chunks(testing::make_annotations("v", 500, {}), ramp_features("v", 500, 16),
                            cfg, rng)
                  .empty());
}

TEST(Chunking, BackgroundCountRoundsUp) {
  const SpottingConfig cfg = default_config();
  const auto ann = testing::make_annotations(
      "v", 4000, {{0, 300}, {1, 800}, {2, 1300}, {0, 1800}, {1, 2300}});
  std::mt19937_64 rng(3);
  const auto chunks = sample_chunks(ann, ramp_features("v", 4000, 2), cfg, rng);
  EXPECT_EQ(chunks.size(), 5u + 2u);  // ceil(5 / 3) = 2
}

TEST(Chunking, PaddingArithmeticNearVideoStart) {
  // Action at frame 5: the chunk start is 5 - offset with offset uniform in
  // [0, 239]. Enumerate seeds and recompute the padding independently.
  const SpottingConfig cfg = default_config();
  const auto ann = testing::make_annotations("v", 300, {{0, 5}});
  const auto feats = ramp_features("v", 300, 3);
  int padded = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    const Chunk c = sample_chunks(ann, feats, cfg, rng).front();
    const int start = c.start_frame;
    ASSERT_LE(start, 5);
    ASSERT_GE(start, 5 - 239);
    const int expect_prefix = std::max(0, -start);
    const int expect_suffix = std::max(0, start + 240 - 300);
    EXPECT_EQ(c.padded_prefix, expect_prefix);
    EXPECT_EQ(c.padded_suffix, expect_suffix);
    if (start < 0) {
      ++padded;
      EXPECT_GT(c.padded_prefix, 0);
      EXPECT_TRUE(c.features.topRows(expect_prefix).isZero(0.0f));
      EXPECT_FLOAT_EQ(c.features(expect_prefix, 0), 1.0f);  // video frame 0
    }
    ASSERT_EQ(c.actions.size(), 1u);
    EXPECT_EQ(c.actions[0].frame, 5 - start);
  }
  EXPECT_GT(padded, 150);  // offsets > 5 are the overwhelming majority
}

TEST(Chunking, ExtractChunkBothSidesPadded) {
  const auto ann = testing::make_annotations("v", 100, {{1, 0}, {0, 99}});
  const Chunk c = extract_chunk(ann, ramp_features("v", 100, 2), -10, 240);
  EXPECT_EQ(c.padded_prefix, 10);
  EXPECT_EQ(c.padded_suffix, 130);
  EXPECT_EQ(c.features.rows(), 240);
  EXPECT_FLOAT_EQ(c.features(10, 1), 1.0f);
  EXPECT_FLOAT_EQ(c.features(109, 1), 100.0f);
  EXPECT_TRUE(c.features.bottomRows(130).isZero(0.0f));
  ASSERT_EQ(c.actions.size(), 2u);
  EXPECT_EQ(c.actions[0].frame, 10);
  EXPECT_EQ(c.actions[1].frame, 109);
}

TEST(Chunking, ThousandSeededSamplesKeepContract) {
  const SpottingConfig cfg = default_config();
  const auto ann =
      testing::make_annotations("v", 900, {{0, 100}, {2, 130}, {1, 400}, {0, 650}, {2, 880}});
  const auto feats = ramp_features("v", 900, 2);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    std::mt19937_64 rng(seed);
    for (const Chunk& c : sample_chunks(ann, feats, cfg, rng)) {
      ASSERT_EQ(c.features.rows(), cfg.chunk_frames);
      for (const auto& a : c.actions) {
        ASSERT_GE(a.frame, 0);
        ASSERT_LT(a.frame, cfg.chunk_frames);
      }
      if (c.is_background()) {
        ASSERT_TRUE(c.actions.empty()) << "seed " << seed;
      } else {
        const ActionEvent& src = ann.actions[c.source_action];
        const bool found = std::any_of(c.actions.begin(), c.actions.end(), [&](const ActionEvent& a) {
          return a.class_index == src.class_index && a.frame + c.start_frame == src.frame;
        });
        ASSERT_TRUE(found) << "seed " << seed;
      }
    }
  }
}

TEST(Chunking, DeterministicGivenSeed) {
  const SpottingConfig cfg = default_config();
  const auto ann = testing::make_annotations("v", 600, {{0, 100}, {1, 400}});
  const auto feats = ramp_features("v", 600, 2);
  std::mt19937_64 a(77), b(77);
  const auto ca = sample_chunks(ann, feats, cfg, a);
  const auto cb = sample_chunks(ann, feats, cfg, b);
  ASSERT_EQ(ca.size(), cb.size());
  for (std::size_t i = 0; i < ca.size(); ++i) {
    EXPECT_EQ(ca[i].start_frame, cb[i].start_frame);
    EXPECT_EQ(ca[i].actions, cb[i].actions);
  }
}

}  // namespace
}  // namespace ctxspot
