#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seesaw/attention.hpp"
#include "seesaw/envs/patch_chase.hpp"
#include "seesaw/rng.hpp"

using namespace seesaw;
using namespace seesaw::attention;

namespace {

Frame random_frame(int h, int w, Rng& rng, double density = 1.0) {
  Frame f(h, w);
  for (auto& b : f.data) b = rng.uniform() < density ? static_cast<std::uint8_t>(rng.below(256)) : 0;
  return f;
}

AttentionParams random_params(const AttentionConfig& cfg, Rng& rng, double sd) {
  std::vector<double> v(param_count(cfg));
  for (auto& x : v) x = rng.normal(0.0, sd);
  return vector_to_params(v, cfg);
}

// Brute-force attention matrix with plain loops.
std::vector<std::vector<double>> oracle_attention(const PatchGrid& g, const AttentionParams& p) {
  const std::size_t n = g.size(), m = static_cast<std::size_t>(g.patch_len);
  const auto d = static_cast<std::size_t>(p.d);
  auto project = [&](const std::vector<double>& w, std::size_t i) {
    std::vector<double> out(d, 0.0);
    auto x = g.patch(i);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t r = 0; r < m; ++r) out[j] += x[r] * w[r * d + j];
      out[j] += w[m * d + j];
    }
    return out;
  };
  std::vector<std::vector<double>> k(n), q(n), a(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) k[i] = project(p.w_k, i), q[i] = project(p.w_q, i);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -1e300;
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0;
      for (std::size_t t = 0; t < d; ++t) s += k[i][t] * q[j][t];
      a[i][j] = s / std::sqrt(static_cast<double>(d));
      mx = std::max(mx, a[i][j]);
    }
    double z = 0;
    for (auto& v : a[i]) z += (v = std::exp(v - mx));
    for (auto& v : a[i]) v /= z;
  }
  return a;
}

AttentionConfig small_config() {
  AttentionConfig c;
  c.patch_size = 4;
  c.patch_stride = 3;
  c.d = 3;
  c.k = 5;
  return c;
}

}  // namespace

TEST(AttentionConfig, DefaultsAndParameterCount) {
  AttentionConfig c;
  EXPECT_EQ(c.patch_size, 10);
  EXPECT_EQ(c.patch_stride, 5);
  EXPECT_EQ(c.d, 4);
  EXPECT_EQ(c.k, 10);
  EXPECT_EQ(param_count(c), 2408u);
  c.patch_size = 7;
  EXPECT_EQ(param_count(c), 1184u);
  c.d = 0;
  EXPECT_EQ(param_count(c), 0u);
}

TEST(PatchGrid, CountsForReferenceFrames) {
  const AttentionConfig c;
  auto g = extract_patches(Frame(210, 160), c);
  EXPECT_EQ(g.rows, 41);
  EXPECT_EQ(g.cols, 31);
  EXPECT_EQ(g.size(), 1271u);
  EXPECT_EQ(g.patches.size(), 1271u * 300u);
  g = extract_patches(Frame(64, 64), c);
  EXPECT_EQ(g.rows, 11);
  EXPECT_EQ(g.size(), 121u);
  g = extract_patches(Frame(10, 10), c);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g.centers[0], std::make_pair(4.5, 4.5));
}

TEST(PatchGrid, CountMatchesWindowEnumeration) {
  Rng rng(3);
  for (int t = 0; t < 500; ++t) {
    AttentionConfig c;
    c.patch_size = 1 + static_cast<int>(rng.below(12));
    c.patch_stride = 1 + static_cast<int>(rng.below(9));
    const int h = c.patch_size + static_cast<int>(rng.below(40));
    const int w = c.patch_size + static_cast<int>(rng.below(40));
    std::size_t windows = 0;
    for (int y = 0; y + c.patch_size <= h; y += c.patch_stride)
      for (int x = 0; x + c.patch_size <= w; x += c.patch_stride) ++windows;
    EXPECT_EQ(static_cast<std::size_t>(c.grid_rows(h)) * c.grid_cols(w), windows);
  }
}

TEST(PatchGrid, PatchesHoldScaledPixels) {
  Rng rng(4);
  const Frame f = random_frame(20, 17, rng);
  const auto c = small_config();
  const auto g = extract_patches(f, c);
  const std::size_t i = 1 * static_cast<std::size_t>(g.cols) + 2;  // window origin (3, 6)
  const auto p = g.patch(i);
  EXPECT_EQ(p[0], f.at(3, 6, 0) / 255.0);
  EXPECT_EQ(p[(1 * 4 + 2) * 3 + 1], f.at(4, 8, 1) / 255.0);
  EXPECT_EQ(g.centers[i], std::make_pair(4.5, 7.5));
}

TEST(PatchGrid, TooSmallFrameThrows) {
  EXPECT_THROW(extract_patches(Frame(9, 64), AttentionConfig{}), FrameTooSmall);
}

TEST(PatchCenters, NormalizedCenterOfLastCell) {
  const AttentionConfig c;
  const auto g = extract_patches(Frame(210, 160), c);
  const std::size_t i = 40 * 31 + 30;
  EXPECT_EQ(g.centers[i], std::make_pair(204.5, 154.5));
  ImportanceRanking r;
  r.top_k = {i, 0};
  const auto v = patch_centers(r, g);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_DOUBLE_EQ(v[0], 204.5 / 209);
  EXPECT_DOUBLE_EQ(v[1], 154.5 / 159);
  EXPECT_DOUBLE_EQ(v[2], 4.5 / 209);
}

TEST(TopK, ThreePatchExample) {
  const std::vector<double> scores{0.8, 1.4, 0.8};
  EXPECT_EQ(select_top_k(scores, 2), (std::vector<std::size_t>{1, 0}));
}

TEST(TopK, MatchesSortOracle) {
  Rng rng(8);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng.below(60), k = 1 + rng.below(n);
    std::vector<double> s(n);
    for (auto& x : s) x = static_cast<double>(rng.below(8)) / 4.0;  // plenty of ties
    std::vector<std::pair<double, std::size_t>> keyed;
    for (std::size_t i = 0; i < n; ++i) keyed.emplace_back(-s[i], i);
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::size_t> want;
    for (std::size_t i = 0; i < k; ++i) want.push_back(keyed[i].second);
    ASSERT_EQ(select_top_k(s, k), want);
  }
}

TEST(ScorePatches, DenseMatrixMatchesBruteForce) {
  Rng rng(12);
  const auto c = small_config();
  for (int t = 0; t < 10; ++t) {
    const auto g = extract_patches(random_frame(16, 19, rng), c);
    const auto p = random_params(c, rng, 0.3);
    const auto a = attention_matrix(g, p, c);
    const auto o = oracle_attention(g, p);
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < g.size(); ++j)
        ASSERT_NEAR(a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), o[i][j], 1e-12);
  }
}

TEST(ScorePatches, RowsAreDistributionsAndImportanceSumsToN) {
  Rng rng(13);
  const auto c = small_config();
  for (int t = 0; t < 50; ++t) {
    const auto g = extract_patches(random_frame(10 + static_cast<int>(rng.below(20)), 12, rng), c);
    const auto p = random_params(c, rng, 0.5 + rng.uniform());
    const auto a = attention_matrix(g, p, c);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      EXPECT_NEAR(a.row(i).sum(), 1.0, 1e-9);
      EXPECT_GE(a.row(i).minCoeff(), 0.0);
    }
    const auto r = score_patches(g, p, c);
    EXPECT_NEAR(std::accumulate(r.scores.begin(), r.scores.end(), 0.0), static_cast<double>(g.size()), 1e-6);
  }
}

TEST(ScorePatches, IdenticalPatchesGiveUniformAttention) {
  Frame f(64, 64);
  f.fill_rect(0, 0, 64, 64, 40, 80, 120);
  Rng rng(1);
  const AttentionConfig c;
  const auto r = score_patches(extract_patches(f, c), random_params(c, rng, 0.1), c);
  for (double s : r.scores) EXPECT_NEAR(s, 1.0, 1e-12);
  std::vector<std::size_t> first(10);
  std::iota(first.begin(), first.end(), 0);
  EXPECT_EQ(r.top_k, first);
}

TEST(ScorePatches, ZeroParamsGiveUniformAttention) {
  Rng rng(2);
  const AttentionConfig c;
  const auto g = extract_patches(random_frame(64, 64, rng), c);
  const auto p = vector_to_params(std::vector<double>(param_count(c), 0.0), c);
  const auto a = attention_matrix(g, p, c);
  EXPECT_NEAR(a.maxCoeff(), 1.0 / 121, 1e-15);
  EXPECT_NEAR(a.minCoeff(), 1.0 / 121, 1e-15);
}

TEST(ScorePatches, ScalingPixelsKeepsShapeContracts) {
  Rng rng(6);
  const AttentionConfig c;
  const auto p = random_params(c, rng, 0.2);
  for (int t = 0; t < 5; ++t) {
    Frame f = random_frame(64, 64, rng);
    for (auto& b : f.data) b = static_cast<std::uint8_t>(b / 2);
    for (int s = 1; s <= 2; ++s) {
      Frame scaled = f;
      for (auto& b : scaled.data) b = static_cast<std::uint8_t>(b * s);
      const auto g = extract_patches(scaled, c);
      const auto r = score_patches(g, p, c);
      EXPECT_EQ(patch_centers(r, g).size(), 20u);
      std::vector<std::size_t> sorted = r.top_k;
      std::sort(sorted.begin(), sorted.end());
      EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
    }
  }
}

TEST(PatchSelector, AgreesWithDenseRoute) {
  Rng rng(21);
  const AttentionConfig c;
  envs::PatchChase env;
  std::vector<Frame> frames;
  Frame f = env.reset(5);
  for (int t = 0; t < 30; ++t) {
    frames.push_back(f);
    f = env.step(static_cast<int>(rng.below(5))).frame;
  }
  for (int t = 0; t < 10; ++t) frames.push_back(random_frame(64, 64, rng, 0.1 * t));
  frames.push_back(random_frame(70, 45, rng));
  int compared = 0;
  for (double sd : {0.01, 0.1, 0.5}) {
    const auto p = random_params(c, rng, sd);
    PatchSelector sel(p, c);
    for (const auto& fr : frames) {
      const auto g = extract_patches(fr, c);
      const auto dense = score_patches(g, p, c);
      const auto fast = sel.rank(fr);
      ASSERT_EQ(fast.scores.size(), dense.scores.size());
      for (std::size_t i = 0; i < g.size(); ++i) ASSERT_NEAR(fast.scores[i], dense.scores[i], 1e-9);
      std::vector<double> sorted = dense.scores;
      std::sort(sorted.rbegin(), sorted.rend());
      bool separated = true;
      for (std::size_t i = 0; i + 1 < sorted.size() && i < 10; ++i)
        separated = separated && (sorted[i] - sorted[i + 1] > 1e-9 || sorted[i] == sorted[i + 1]);
      if (!separated) continue;
      EXPECT_EQ(fast.top_k, dense.top_k);
      std::vector<double> centers(20);
      sel.centers(fr, centers);
      const auto want = patch_centers(dense, g);
      for (std::size_t i = 0; i < 20; ++i) EXPECT_DOUBLE_EQ(centers[i], want[i]);
      ++compared;
    }
  }
  EXPECT_GT(compared, 60);
}

TEST(AttentionParams, VectorRoundTrip) {
  Rng rng(9);
  const AttentionConfig c;
  std::vector<double> v(2408);
  for (auto& x : v) x = rng.normal();
  const auto p = vector_to_params(v, c);
  EXPECT_EQ(p.rows, 301);
  EXPECT_EQ(params_to_vector(p), v);
  v.pop_back();
  EXPECT_THROW(vector_to_params(v, c), LengthMismatch);
}

TEST(Overlay, OutlinesSelectedWindows) {
  const AttentionConfig c;
  const Frame f(64, 64);
  const std::vector<std::size_t> sel{0, 12};  // origins (0, 0) and (5, 5)
  const Frame o = overlay_selected(f, sel, 11, c);
  EXPECT_EQ(o.at(0, 9, 0), 255);
  EXPECT_EQ(o.at(9, 0, 1), 255);
  EXPECT_EQ(o.at(14, 14, 2), 255);
  EXPECT_EQ(o.at(5, 9, 0), 255);
  EXPECT_EQ(o.at(7, 7, 0), 0);
  EXPECT_EQ(o.at(20, 20, 0), 0);
}
