#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "warmstart/data.hpp"
#include "warmstart/harness.hpp"

using namespace warmstart;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("warmstart_test_" + name)).string();
}

void write_text(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

}  // namespace

TEST(Synthetic, SameSpecSameBytes) {
  SyntheticSpec s;
  s.n = 500;
  EXPECT_EQ(gen_synthetic(s), gen_synthetic(s));
  s.kind = SyntheticKind::spirals;
  s.d = 2;
  s.k = 3;
  EXPECT_EQ(gen_synthetic(s), gen_synthetic(s));
}

TEST(Synthetic, FlippedLabelFractionMatchesNoiseRate) {
  SyntheticSpec clean;
  clean.label_noise = 0.0;
  SyntheticSpec noisy = clean;
  noisy.label_noise = 0.1;
  const auto a = gen_synthetic(clean);
  const auto b = gen_synthetic(noisy);
  ASSERT_EQ(a.features, b.features);
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < a.size(); ++i) flipped += a.labels[i] != b.labels[i];
  EXPECT_NEAR(static_cast<double>(flipped) / static_cast<double>(a.size()), 0.1, 0.02);
}

TEST(Synthetic, CleanLabelsAreBalanced) {
  SyntheticSpec s;
  s.n = 1000;
  s.label_noise = 0.0;
  const auto ds = gen_synthetic(s);
  std::vector<int> counts(s.k, 0);
  for (int y : ds.labels) ++counts[static_cast<std::size_t>(y)];
  for (int c : counts) EXPECT_EQ(c, 100);
}

TEST(Synthetic, SeparableMixtureIsFitPerfectly) {
  SyntheticSpec s;
  s.n = 600;
  s.d = 8;
  s.k = 3;
  s.label_noise = 0.0;
  s.cluster_spread = 6.0;
  const auto ds = gen_synthetic(s);
  const auto idx = iota_indices(ds.size());
  AdamConfig adam;
  adam.learning_rate = 0.01;
  Optimizer opt(adam);
  ConvergenceCriterion crit{1.0, 1, 200, false};
  const auto spec = NetworkSpec::mlp(8, {16}, 3);
  const auto out = train_to_convergence(init_params(spec, 1), ds, idx, ds, opt, TrainConfig{adam, 0.0}, crit, 2);
  EXPECT_EQ(out.result.train_accuracy, 1.0);
}

TEST(Synthetic, SharedCenterSeedWithShiftMovesMeans) {
  SyntheticSpec src;
  src.n = 2000;
  src.label_noise = 0.0;
  src.center_seed = 5;
  SyntheticSpec tgt = src;
  tgt.seed = 99;
  tgt.mean_shift = 1.0;
  const auto a = gen_synthetic(src);
  const auto b = gen_synthetic(tgt);
  const double shift = (a.features.colwise().mean() - b.features.colwise().mean()).norm();
  EXPECT_GT(shift, 0.5);
}

TEST(Synthetic, RejectsBadSpecs) {
  SyntheticSpec s;
  s.k = 1;
  EXPECT_THROW(gen_synthetic(s), InputError);
  s = {};
  s.label_noise = 0.7;
  EXPECT_THROW(gen_synthetic(s), InputError);
}

TEST(Csv, HandWrittenFileRoundTrips) {
  const auto path = temp_path("hand.csv");
  write_text(path, "0.5,1.25,0\n-3,2e-3,2\n7,8,1\n");
  const auto ds = load_csv(path);
  Matrix expect(3, 2);
  expect << 0.5, 1.25, -3, 2e-3, 7, 8;
  EXPECT_EQ(ds.features, expect);
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 2, 1}));
  EXPECT_EQ(ds.num_classes, 3u);
}

TEST(Csv, HeaderIsSkipped) {
  const auto path = temp_path("header.csv");
  write_text(path, "x,label\n1.5,1\n");
  EXPECT_EQ(load_csv(path, true).size(), 1u);
}

TEST(Csv, EmptyFileHasNoRows) {
  const auto path = temp_path("empty.csv");
  write_text(path, "");
  try {
    load_csv(path);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("no rows"), std::string::npos);
  }
}

TEST(Csv, MalformedRowNamesLine) {
  const auto path = temp_path("bad.csv");
  write_text(path, "1,2,0\n1,oops,1\n");
  try {
    load_csv(path);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
  write_text(path, "1,2,0\n1,2\n");
  EXPECT_THROW(load_csv(path), InputError);
}

TEST(Csv, NonIntegerLabelRejected) {
  const auto path = temp_path("label.csv");
  write_text(path, "1,2,0.5\n");
  EXPECT_THROW(load_csv(path), InputError);
  write_text(path, "1,2,-1\n");
  EXPECT_THROW(load_csv(path), InputError);
}

TEST(Csv, SyntheticWriteReadIsLossless) {
  SyntheticSpec s;
  s.n = 300;
  s.d = 5;
  s.k = 4;
  const auto ds = gen_synthetic(s);
  const auto path = temp_path("roundtrip.csv");
  write_csv(ds, path, true);
  EXPECT_EQ(load_csv(path, true), ds);
}

TEST(Split, CountsAndPartition) {
  const auto [train, val] = split_indices(9, 1.0 / 3.0, 1);
  EXPECT_EQ(val.size(), 3u);
  EXPECT_EQ(train.size(), 6u);
  std::vector<std::size_t> all(train);
  all.insert(all.end(), val.begin(), val.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, iota_indices(9));
}

TEST(Split, SeedDependence) {
  EXPECT_EQ(split_indices(100, 0.3, 4), split_indices(100, 0.3, 4));
  EXPECT_NE(split_indices(100, 0.3, 4), split_indices(100, 0.3, 5));
}

TEST(Split, TooSmallToSplit) {
  EXPECT_THROW(split_indices(1, 0.5, 0), InputError);
  EXPECT_THROW(split_indices(10, 0.0, 0), InputError);
}

TEST(Stream, ExactRounds) {
  const auto s = make_stream(10, 5, 0);
  ASSERT_EQ(s.rounds.size(), 2u);
  EXPECT_EQ(s.full_rounds(), 2u);
  auto all = s.accumulated(1);
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, iota_indices(10));
}

TEST(Stream, RemainderRound) {
  const auto s = make_stream(10, 4, 0);
  ASSERT_EQ(s.rounds.size(), 3u);
  EXPECT_EQ(s.rounds[0].size(), 4u);
  EXPECT_EQ(s.rounds[1].size(), 4u);
  EXPECT_EQ(s.rounds[2].size(), 2u);
  EXPECT_EQ(s.full_rounds(), 2u);
}

TEST(Stream, DisjointAndCoveringForManySizes) {
  for (std::size_t n : {1u, 7u, 64u, 101u}) {
    for (long long k : {1LL, 3LL, 7LL}) {
      if (static_cast<std::size_t>(k) > n) continue;
      const auto s = make_stream(n, k, n * 31 + static_cast<std::size_t>(k));
      std::vector<std::size_t> all;
      for (std::size_t r = 0; r < s.rounds.size(); ++r) {
        if (r + 1 < s.rounds.size()) EXPECT_EQ(s.rounds[r].size(), static_cast<std::size_t>(k));
        all.insert(all.end(), s.rounds[r].begin(), s.rounds[r].end());
      }
      std::sort(all.begin(), all.end());
      EXPECT_EQ(all, iota_indices(n));
    }
  }
}

TEST(Stream, FirstRoundInclusionIsUniform) {
  // Each of 20 indices lands in a 5-element first round with probability 1/4.
  const std::size_t n = 20, trials = 100;
  std::vector<double> counts(n, 0);
  for (std::uint64_t seed = 0; seed < trials; ++seed) {
    const auto stream = make_stream(n, 5, seed);
    for (auto i : stream.rounds[0]) counts[i] += 1;
  }
  const double expected = trials * 5.0 / n;
  double chi2 = 0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 19 degrees of freedom; 99.9th percentile is about 43.8.
  EXPECT_LT(chi2, 43.8);
}

TEST(Stream, RejectsNonPositiveRoundSize) {
  EXPECT_THROW(make_stream(10, 0, 0), InputError);
  EXPECT_THROW(make_stream(10, -3, 0), InputError);
  EXPECT_THROW(make_stream(10, 11, 0), InputError);
}

TEST(Minibatches, SizesAndPermutation) {
  const auto idx = iota_indices(10);
  const auto b = minibatches(idx, 3, 1, 1);
  ASSERT_EQ(b.size(), 4u);
  EXPECT_EQ(b[3].size(), 1u);
  std::vector<std::size_t> all;
  for (const auto& x : b) all.insert(all.end(), x.begin(), x.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, idx);
  EXPECT_EQ(batches_per_epoch(10, 3), 4u);
}

TEST(Minibatches, EpochsDifferSeedsRepeat) {
  const auto idx = iota_indices(50);
  EXPECT_EQ(minibatches(idx, 8, 3, 1), minibatches(idx, 8, 3, 1));
  EXPECT_NE(minibatches(idx, 8, 3, 1), minibatches(idx, 8, 3, 2));
  EXPECT_THROW(minibatches(idx, 0, 3, 1), InputError);
}
