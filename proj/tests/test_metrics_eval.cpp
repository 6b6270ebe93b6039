#include "causalnet/eval.hpp"
#include "causalnet/metrics.hpp"
#include "causalnet/synth.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace causalnet;

namespace {

/// Recomputes the metrics straight from (truth, predicted) pairs.
Metrics brute_force(const std::vector<int>& truth, const std::vector<int>& pred, int n) {
  double f1 = 0, recall = 0;
  int correct = 0;
  for (int k = 0; k < n; ++k) {
    int tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] == k && pred[i] == k) ++tp;
      if (truth[i] != k && pred[i] == k) ++fp;
      if (truth[i] == k && pred[i] != k) ++fn;
    }
    f1 += (2 * tp + fp + fn) ? 2.0 * tp / (2 * tp + fp + fn) : 0.0;
    recall += (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
  }
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == pred[i];
  return {f1 / n, recall / n, static_cast<double>(correct) / truth.size()};
}

ConfusionMatrix from_pairs(const std::vector<int>& truth, const std::vector<int>& pred, int n) {
  ConfusionMatrix cm(n);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], pred[i]);
  return cm;
}

}  // namespace

TEST(Metrics, HandWorkedExample) {
  Eigen::MatrixXi c(3, 3);
  c << 2, 0, 0, 1, 1, 0, 0, 1, 1;
  const auto m = compute_metrics(ConfusionMatrix(c));
  EXPECT_NEAR(m.uf1, (0.8 + 0.5 + 2.0 / 3.0) / 3.0, 1e-12);
  EXPECT_NEAR(m.uf1, 0.6556, 1e-4);
  EXPECT_NEAR(m.uar, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(m.acc, 4.0 / 6.0, 1e-12);
}

TEST(Metrics, PerfectAndDegenerate) {
  Eigen::MatrixXi d = Eigen::MatrixXi::Zero(3, 3);
  d.diagonal() << 4, 2, 5;
  const auto p = compute_metrics(ConfusionMatrix(d));
  EXPECT_DOUBLE_EQ(p.uf1, 1.0);
  EXPECT_DOUBLE_EQ(p.uar, 1.0);
  EXPECT_DOUBLE_EQ(p.acc, 1.0);

  Eigen::MatrixXi g = Eigen::MatrixXi::Zero(3, 3);
  g(0, 0) = 3;
  g(1, 1) = 2;  // class 2 absent from truth and predictions
  const auto m = compute_metrics(ConfusionMatrix(g));
  EXPECT_NEAR(m.uf1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(m.uar, 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(m.acc, 1.0);
  EXPECT_THROW(compute_metrics(ConfusionMatrix(3)), std::invalid_argument);
  EXPECT_THROW(ConfusionMatrix(3).add(3, 0), std::out_of_range);
}

TEST(Metrics, MatchesBruteForceOnRandomVectors) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> cls(0, 2), len(1, 40);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = len(rng);
    std::vector<int> t(n), p(n);
    for (int i = 0; i < n; ++i) t[i] = cls(rng), p[i] = cls(rng);
    const auto a = compute_metrics(from_pairs(t, p, 3));
    const auto b = brute_force(t, p, 3);
    ASSERT_EQ(a.uf1, b.uf1);
    ASSERT_EQ(a.uar, b.uar);
    ASSERT_EQ(a.acc, b.acc);
  }
}

TEST(Metrics, RelabelingInvariance) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> cls(0, 2);
  const int perm[] = {2, 0, 1};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> t(25), p(25), tp(25), pp(25);
    for (int i = 0; i < 25; ++i) {
      t[i] = cls(rng), p[i] = cls(rng);
      tp[i] = perm[t[i]], pp[i] = perm[p[i]];
    }
    const auto a = compute_metrics(from_pairs(t, p, 3)), b = compute_metrics(from_pairs(tp, pp, 3));
    EXPECT_NEAR(a.uf1, b.uf1, 1e-12);
    EXPECT_NEAR(a.uar, b.uar, 1e-12);
    EXPECT_NEAR(a.acc, b.acc, 1e-12);
  }
}

TEST(Metrics, PooledEqualsSumOfFolds) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> cls(0, 2);
  ConfusionMatrix total(3);
  std::vector<int> all_t, all_p;
  for (int fold = 0; fold < 5; ++fold) {
    ConfusionMatrix cm(3);
    for (int i = 0; i < 9; ++i) {
      const int t = cls(rng), p = cls(rng);
      cm.add(t, p);
      all_t.push_back(t), all_p.push_back(p);
    }
    total += cm;
  }
  EXPECT_EQ(total, from_pairs(all_t, all_p, 3));
}

TEST(Metrics, SummaryUsesPopulationStd) {
  const auto s = summarize({{0.8, 0.8, 0.8}, {0.9, 0.9, 0.9}});
  EXPECT_NEAR(s.mean.uf1, 0.85, 1e-12);
  EXPECT_NEAR(s.std.uf1, 0.05, 1e-12);
  EXPECT_EQ(summarize({{0.7, 0.6, 0.5}}).std.uar, 0.0);
  EXPECT_THROW(summarize({}), std::invalid_argument);
}

// ---- LOSO ---------------------------------------------------------------------

TEST(Loso, PartitionAndOrder) {
  auto samples = synth_dataset(5, 4, 1);
  std::reverse(samples.begin(), samples.end());
  const auto folds = loso_split(samples);
  ASSERT_EQ(folds.size(), 5u);
  std::set<std::size_t> seen;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (f) EXPECT_LT(folds[f - 1].subject, folds[f].subject);
    EXPECT_EQ(folds[f].train.size() + folds[f].test.size(), samples.size());
    for (const auto i : folds[f].test) {
      EXPECT_TRUE(seen.insert(i).second);
      EXPECT_EQ(subject_key(samples[i]), folds[f].subject);
    }
    for (const auto i : folds[f].train) EXPECT_NE(subject_key(samples[i]), folds[f].subject);
  }
  EXPECT_EQ(seen.size(), samples.size());
  EXPECT_THROW(loso_split(std::vector<MESample>(samples.begin(), samples.begin() + 1)), std::invalid_argument);
}

TEST(Loso, SameSubjectIdInTwoDatasetsIsTwoFolds) {
  auto a = synth_dataset(2, 3, 2);
  auto b = synth_dataset(3, 3, 3);
  for (auto& s : b) s.dataset_id = DatasetId::SMIC;
  a.insert(a.end(), b.begin(), b.end());
  EXPECT_EQ(loso_split(a).size(), 5u);
}

TEST(EvaluateCde, OracleAndPerDatasetPartition) {
  auto samples = synth_dataset(2, 3, 4);
  auto other = synth_dataset(2, 3, 5);
  for (auto& s : other) s.dataset_id = DatasetId::SAMM;
  samples.insert(samples.end(), other.begin(), other.end());
  EvalOptions opts;
  opts.oracle = true;
  const auto r = evaluate_cde(samples, desk_scale_config(), 0, opts);
  EXPECT_EQ(r.folds.size(), 4u);
  const auto m = r.metrics(3);
  ASSERT_EQ(m.size(), 3u);
  for (const auto& [name, v] : m) {
    EXPECT_DOUBLE_EQ(v.uf1, 1.0) << name;
    EXPECT_DOUBLE_EQ(v.uar, 1.0) << name;
    EXPECT_DOUBLE_EQ(v.acc, 1.0) << name;
  }
  auto recombined = r.pooled(3, DatasetId::SYNTH);
  recombined += r.pooled(3, DatasetId::SAMM);
  EXPECT_EQ(recombined, r.pooled(3));
  EXPECT_EQ(r.pooled(3).total(), static_cast<long>(samples.size()));
}

TEST(EvaluateCde, TrainingErrorsNameTheFold) {
  auto samples = synth_dataset(2, 2, 6);
  auto cfg = desk_scale_config();
  cfg.train.epochs = 1;
  auto inputs = build_inputs(samples, cfg);
  for (auto& in : inputs) in.flow_oa.data(0, 0) = std::nan("");
  try {
    evaluate_loso(samples, inputs, {inputs}, cfg, 0);
    FAIL();
  } catch (const FoldError& e) {
    EXPECT_EQ(e.fold(), "SYNTH/s01");
  }
}

TEST(RepeatRuns, SeedsAndSpread) {
  std::vector<std::uint64_t> seeds;
  const auto s = repeat_runs(3, 10, [&](std::uint64_t seed) {
    seeds.push_back(seed);
    return RunMetrics{{"x", Metrics{0.5, 0.5, 0.5}}};
  });
  EXPECT_EQ(seeds, (std::vector<std::uint64_t>{10, 11, 12}));
  EXPECT_EQ(s.at("x").std.uf1, 0.0);
  EXPECT_EQ(s.at("x").runs.size(), 3u);
  EXPECT_THROW(repeat_runs(0, 0, [](std::uint64_t) { return RunMetrics{}; }), std::invalid_argument);
}
