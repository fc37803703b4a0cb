#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seesaw/error.hpp"
#include "seesaw/frame.hpp"
#include "seesaw/rng.hpp"

namespace seesaw::attention {

struct AttentionConfig {
  int patch_size = 10;
  int patch_stride = 5;
  int d = 4;  ///< key/query dimension
  int k = 10;  ///< patches handed to the controller
  int channels = 3;

  int patch_len() const { return patch_size * patch_size * channels; }
  /// Rows of W_k / W_q: one per patch element plus the bias row (last).
  int param_rows() const { return patch_len() + 1; }

  int grid_rows(int height) const { return (height - patch_size) / patch_stride + 1; }
  int grid_cols(int width) const { return (width - patch_size) / patch_stride + 1; }

  void validate() const {
    if (patch_size < 1) throw BadConfig("patch_size must be >= 1");
    if (patch_stride < 1) throw BadConfig("patch_stride must be >= 1");
    if (d < 0) throw BadConfig("d must be >= 0");
    if (k < 1) throw BadConfig("k must be >= 1");
    if (channels != 3) throw BadConfig("only RGB frames (channels = 3) are supported");
  }
};

/// Learnable scalars: 2 * (patch_size^2 * channels + 1) * d.
inline std::size_t param_count(const AttentionConfig& cfg) {
  return 2 * static_cast<std::size_t>(cfg.param_rows()) * static_cast<std::size_t>(cfg.d);
}

/// Key and query projections, each (m + 1) x d, row-major. The last row is
/// the bias, applied through a constant-1 input appended to each patch.
struct AttentionParams {
  int rows = 0;
  int d = 0;
  std::vector<double> w_k;
  std::vector<double> w_q;

  static AttentionParams zeros(const AttentionConfig& cfg) {
    AttentionParams p;
    p.rows = cfg.param_rows();
    p.d = cfg.d;
    p.w_k.assign(static_cast<std::size_t>(p.rows) * p.d, 0.0);
    p.w_q = p.w_k;
    return p;
  }

  bool operator==(const AttentionParams&) const = default;
};

inline std::vector<double> params_to_vector(const AttentionParams& p) {
  std::vector<double> v;
  v.reserve(p.w_k.size() + p.w_q.size());
  v.insert(v.end(), p.w_k.begin(), p.w_k.end());
  v.insert(v.end(), p.w_q.begin(), p.w_q.end());
  return v;
}

inline AttentionParams vector_to_params(std::span<const double> v, const AttentionConfig& cfg) {
  if (v.size() != param_count(cfg))
    throw LengthMismatch("attention vector has " + std::to_string(v.size()) + " entries, expected " +
                         std::to_string(param_count(cfg)));
  AttentionParams p = AttentionParams::zeros(cfg);
  const auto half = static_cast<std::ptrdiff_t>(p.w_k.size());
  std::copy(v.begin(), v.begin() + half, p.w_k.begin());
  std::copy(v.begin() + half, v.end(), p.w_q.begin());
  return p;
}

struct PatchGrid {
  int rows = 0;
  int cols = 0;
  int patch_len = 0;
  int frame_height = 0;
  int frame_width = 0;
  /// rows * cols flattened patches, row-major over the grid, each patch in
  /// (y, x, channel) order, scaled to [0, 1].
  std::vector<double> patches;
  /// Pixel-space (y, x) center of every patch.
  std::vector<std::pair<double, double>> centers;

  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
  std::span<const double> patch(std::size_t i) const {
    return {patches.data() + i * static_cast<std::size_t>(patch_len), static_cast<std::size_t>(patch_len)};
  }
};

struct ImportanceRanking {
  std::vector<double> scores;
  std::vector<std::size_t> top_k;
};

inline void check_frame(const Frame& f, const AttentionConfig& cfg) {
  if (!f.valid()) throw ShapeMismatch("frame buffer does not match its dimensions");
  if (f.height < cfg.patch_size || f.width < cfg.patch_size)
    throw FrameTooSmall(std::to_string(f.height) + "x" + std::to_string(f.width) + " frame is smaller than a " +
                        std::to_string(cfg.patch_size) + "px patch");
}

inline PatchGrid extract_patches(const Frame& f, const AttentionConfig& cfg) {
  check_frame(f, cfg);
  PatchGrid g;
  g.rows = cfg.grid_rows(f.height);
  g.cols = cfg.grid_cols(f.width);
  g.patch_len = cfg.patch_len();
  g.frame_height = f.height;
  g.frame_width = f.width;
  g.patches.reserve(g.size() * static_cast<std::size_t>(g.patch_len));
  const double half = (cfg.patch_size - 1) / 2.0;
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      const int y0 = r * cfg.patch_stride, x0 = c * cfg.patch_stride;
      for (int dy = 0; dy < cfg.patch_size; ++dy)
        for (int dx = 0; dx < cfg.patch_size; ++dx)
          for (int ch = 0; ch < Frame::channels; ++ch) g.patches.push_back(f.at(y0 + dy, x0 + dx, ch) / 255.0);
      g.centers.emplace_back(y0 + half, x0 + half);
    }
  }
  return g;
}

/// Indices of the k largest scores, highest first; equal scores go to the
/// lower index.
inline std::vector<std::size_t> select_top_k(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });
  idx.resize(k);
  return idx;
}

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline void check_params(const AttentionParams& p, const AttentionConfig& cfg) {
  const auto expect = static_cast<std::size_t>(cfg.param_rows()) * static_cast<std::size_t>(cfg.d);
  if (p.rows != cfg.param_rows() || p.d != cfg.d || p.w_k.size() != expect || p.w_q.size() != expect)
    throw ShapeMismatch("attention parameters are not " + std::to_string(cfg.param_rows()) + "x" +
                        std::to_string(cfg.d));
}

}  // namespace detail

/// Dense n x n attention: row-softmax((X W_k)(X W_q)^T / sqrt(d)), X with a
/// constant-1 column appended.
inline detail::RowMatrix attention_matrix(const PatchGrid& grid, const AttentionParams& params,
                                          const AttentionConfig& cfg) {
  detail::check_params(params, cfg);
  if (grid.patch_len != cfg.patch_len()) throw ShapeMismatch("patch length does not match config");
  const auto n = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index m1 = cfg.param_rows();
  detail::RowMatrix x(n, m1);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto p = grid.patch(static_cast<std::size_t>(i));
    for (Eigen::Index j = 0; j + 1 < m1; ++j) x(i, j) = p[static_cast<std::size_t>(j)];
    x(i, m1 - 1) = 1.0;
  }
  const Eigen::Map<const detail::RowMatrix> wk(params.w_k.data(), m1, cfg.d);
  const Eigen::Map<const detail::RowMatrix> wq(params.w_q.data(), m1, cfg.d);
  const detail::RowMatrix keys = x * wk;
  const detail::RowMatrix queries = x * wq;
  const double scale = cfg.d > 0 ? 1.0 / std::sqrt(static_cast<double>(cfg.d)) : 1.0;
  detail::RowMatrix a = (keys * queries.transpose()) * scale;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mx = a.row(i).maxCoeff();
    a.row(i) = (a.row(i).array() - mx).exp();
    a.row(i) /= a.row(i).sum();
  }
  return a;
}

/// Importance of each patch is its column sum in the attention matrix.
inline ImportanceRanking score_patches(const PatchGrid& grid, const AttentionParams& params,
                                       const AttentionConfig& cfg) {
  const auto a = attention_matrix(grid, params, cfg);
  ImportanceRanking r;
  r.scores.resize(grid.size());
  for (Eigen::Index j = 0; j < a.cols(); ++j) r.scores[static_cast<std::size_t>(j)] = a.col(j).sum();
  r.top_k = select_top_k(r.scores, static_cast<std::size_t>(cfg.k));
  return r;
}

/// (y / (H - 1), x / (W - 1)) of each selected patch center, in rank order.
inline std::vector<double> patch_centers(const ImportanceRanking& ranking, const PatchGrid& grid) {
  const double hy = grid.frame_height > 1 ? grid.frame_height - 1.0 : 1.0;
  const double wx = grid.frame_width > 1 ? grid.frame_width - 1.0 : 1.0;
  std::vector<double> out;
  out.reserve(2 * ranking.top_k.size());
  for (std::size_t i : ranking.top_k) {
    out.push_back(grid.centers.at(i).first / hy);
    out.push_back(grid.centers.at(i).second / wx);
  }
  return out;
}

/// Frame -> top-k patch centers without materializing the patch matrix.
///
/// Projections are accumulated pixel by pixel into every window that covers
/// the pixel, skipping zero bytes, so mostly-dark frames are cheap. Patches
/// with bitwise identical key/query rows are then scored once: their
/// attention rows and columns are identical, so the softmax can be evaluated
/// over distinct rows weighted by multiplicity. Results agree with
/// score_patches up to floating-point summation order.
class PatchSelector {
 public:
  PatchSelector(const AttentionParams& params, const AttentionConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    detail::check_params(params, cfg_);
    const int m = cfg_.patch_len(), d = cfg_.d, w = 2 * d;
    table_.assign(static_cast<std::size_t>(m) * w, 0.0);
    for (int p = 0; p < m; ++p)
      for (int j = 0; j < d; ++j) {
        table_[static_cast<std::size_t>(p) * w + j] = params.w_k[static_cast<std::size_t>(p) * d + j];
        table_[static_cast<std::size_t>(p) * w + d + j] = params.w_q[static_cast<std::size_t>(p) * d + j];
      }
    bias_.resize(static_cast<std::size_t>(w));
    for (int j = 0; j < d; ++j) {
      bias_[j] = params.w_k[static_cast<std::size_t>(m) * d + j];
      bias_[d + j] = params.w_q[static_cast<std::size_t>(m) * d + j];
    }
    scale_ = d > 0 ? 1.0 / std::sqrt(static_cast<double>(d)) : 1.0;
  }

  const AttentionConfig& config() const { return cfg_; }

  const ImportanceRanking& rank(const Frame& f) {
    check_frame(f, cfg_);
    rows_ = cfg_.grid_rows(f.height);
    cols_ = cfg_.grid_cols(f.width);
    height_ = f.height;
    width_ = f.width;
    const std::size_t n = static_cast<std::size_t>(rows_) * cols_;
    const int d = cfg_.d, w = 2 * d, ps = cfg_.patch_size, st = cfg_.patch_stride;

    proj_.resize(n * w);
    for (std::size_t i = 0; i < n; ++i) std::copy(bias_.begin(), bias_.end(), proj_.begin() + i * w);

    const std::uint8_t* px = f.data.data();
    for (int y = 0; y < f.height; ++y) {
      const int r_lo = y >= ps ? (y - ps) / st + 1 : 0;
      const int r_hi = std::min(y / st, rows_ - 1);
      if (r_lo > r_hi) {
        px += static_cast<std::size_t>(f.width) * 3;
        continue;
      }
      for (int x = 0; x < f.width; ++x, px += 3) {
        if ((px[0] | px[1] | px[2]) == 0) continue;
        const int c_lo = x >= ps ? (x - ps) / st + 1 : 0;
        const int c_hi = std::min(x / st, cols_ - 1);
        for (int ch = 0; ch < 3; ++ch) {
          if (px[ch] == 0) continue;
          const double v = px[ch] / 255.0;
          for (int r = r_lo; r <= r_hi; ++r)
            for (int c = c_lo; c <= c_hi; ++c) {
              const int p = ((y - r * st) * ps + (x - c * st)) * 3 + ch;
              const double* wt = &table_[static_cast<std::size_t>(p) * w];
              double* acc = &proj_[(static_cast<std::size_t>(r) * cols_ + c) * w];
              for (int j = 0; j < w; ++j) acc[j] += v * wt[j];
            }
        }
      }
    }

    // Group identical key/query rows.
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    auto row = [&](std::size_t i) { return &proj_[i * w]; };
    std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      const int c = std::memcmp(row(a), row(b), sizeof(double) * static_cast<std::size_t>(w));
      return c < 0 || (c == 0 && a < b);
    });
    group_.resize(n);
    uniq_.clear();
    count_.clear();
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t i = order_[t];
      if (t == 0 || std::memcmp(row(i), row(order_[t - 1]), sizeof(double) * static_cast<std::size_t>(w)) != 0) {
        uniq_.push_back(i);
        count_.push_back(0.0);
      }
      group_[i] = uniq_.size() - 1;
      count_.back() += 1.0;
    }

    const std::size_t u = uniq_.size();
    logits_.resize(u * u);
    for (std::size_t a = 0; a < u; ++a) {
      const double* key = row(uniq_[a]);
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t b = 0; b < u; ++b) {
        const double* query = row(uniq_[b]) + d;
        double s = 0.0;
        for (int j = 0; j < d; ++j) s += key[j] * query[j];
        s *= scale_;
        logits_[a * u + b] = s;
        mx = std::max(mx, s);
      }
      double z = 0.0;
      for (std::size_t b = 0; b < u; ++b) {
        const double e = std::exp(logits_[a * u + b] - mx);
        logits_[a * u + b] = e;
        z += count_[b] * e;
      }
      const double weight = count_[a] / z;
      for (std::size_t b = 0; b < u; ++b) logits_[a * u + b] *= weight;
    }
    importance_.assign(u, 0.0);
    for (std::size_t a = 0; a < u; ++a)
      for (std::size_t b = 0; b < u; ++b) importance_[b] += logits_[a * u + b];

    ranking_.scores.resize(n);
    for (std::size_t i = 0; i < n; ++i) ranking_.scores[i] = importance_[group_[i]];
    ranking_.top_k = select_top_k(ranking_.scores, static_cast<std::size_t>(cfg_.k));
    return ranking_;
  }

  /// Rank `f` and write the normalized centers of the top-k patches to `out`
  /// (length 2k).
  void centers(const Frame& f, std::span<double> out) {
    const auto& r = rank(f);
    if (out.size() != 2 * r.top_k.size()) throw ShapeMismatch("centers buffer must hold 2k values");
    const double half = (cfg_.patch_size - 1) / 2.0;
    const double hy = height_ > 1 ? height_ - 1.0 : 1.0;
    const double wx = width_ > 1 ? width_ - 1.0 : 1.0;
    for (std::size_t t = 0; t < r.top_k.size(); ++t) {
      const auto i = static_cast<int>(r.top_k[t]);
      out[2 * t] = ((i / cols_) * cfg_.patch_stride + half) / hy;
      out[2 * t + 1] = ((i % cols_) * cfg_.patch_stride + half) / wx;
    }
  }

  /// Top-left pixel corner of grid patch `i` from the last ranked frame.
  std::pair<int, int> window_origin(std::size_t i) const {
    const auto ii = static_cast<int>(i);
    return {(ii / cols_) * cfg_.patch_stride, (ii % cols_) * cfg_.patch_stride};
  }

 private:
  AttentionConfig cfg_;
  std::vector<double> table_;
  std::vector<double> bias_;
  double scale_ = 1.0;
  int rows_ = 0, cols_ = 0, height_ = 0, width_ = 0;
  std::vector<double> proj_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> group_;
  std::vector<std::size_t> uniq_;
  std::vector<double> count_;
  std::vector<double> logits_;
  std::vector<double> importance_;
  ImportanceRanking ranking_;
};

/// Copy of `f` with the outline of every selected window drawn in white.
inline Frame overlay_selected(const Frame& f, std::span<const std::size_t> top_k, int cols,
                              const AttentionConfig& cfg) {
  Frame out = f;
  for (std::size_t i : top_k) {
    const int y0 = static_cast<int>(i) / cols * cfg.patch_stride;
    const int x0 = static_cast<int>(i) % cols * cfg.patch_stride;
    const int y1 = y0 + cfg.patch_size - 1, x1 = x0 + cfg.patch_size - 1;
    for (int x = x0; x <= x1; ++x) {
      out.fill_rect(y0, x, 1, 1, 255, 255, 255);
      out.fill_rect(y1, x, 1, 1, 255, 255, 255);
    }
    for (int y = y0; y <= y1; ++y) {
      out.fill_rect(y, x0, 1, 1, 255, 255, 255);
      out.fill_rect(y, x1, 1, 1, 255, 255, 255);
    }
  }
  return out;
}

}  // namespace seesaw::attention
