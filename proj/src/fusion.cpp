// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#include "svl/fusion.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "svl/error.hpp"
#include "svl/image.hpp"

namespace svl {
namespace {

int grid_side_of(Eigen::Index n) {
  const auto side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (side <= 0 || static_cast<Eigen::Index>(side) * side != n) {
    throw InputError("patch count " + std::to_string(n) + " is not a perfect square");
  }
  return side;
}

Matrix gaussian(int rows, int cols, double stddev, Rng& rng) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = stddev * rng.normal();
  return m;
}

// x: C x N (N = g*g, row-major grid). Returns (C*9) x N.
Matrix im2col(const Matrix& x, int g) {
  const auto channels = x.rows();
  Matrix cols = Matrix::Zero(channels * 9, x.cols());
  for (Eigen::Index c = 0; c < channels; ++c) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const Eigen::Index row = c * 9 + ky * 3 + kx;
        for (int y = 0; y < g; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= g) continue;
          for (int xx = 0; xx < g; ++xx) {
            const int sx = xx + kx - 1;
            if (sx < 0 || sx >= g) continue;
            cols(row, y * g + xx) = x(c, sy * g + sx);
          }
        }
      }
    }
  }
  return cols;
}

Matrix col2im(const Matrix& cols, Eigen::Index channels, int g) {
  Matrix x = Matrix::Zero(channels, static_cast<Eigen::Index>(g) * g);
  for (Eigen::Index c = 0; c < channels; ++c) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const Eigen::Index row = c * 9 + ky * 3 + kx;
        for (int y = 0; y < g; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= g) continue;
          for (int xx = 0; xx < g; ++xx) {
            const int sx = xx + kx - 1;
            if (sx < 0 || sx >= g) continue;
            x(c, sy * g + sx) += cols(row, y * g + xx);
          }
        }
      }
    }
  }
  return x;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

void check_levels(const ConsistencyMaps& maps, const FusionParams& params) {
  const auto k = static_cast<Eigen::Index>(maps.layers.size());
  if (k == 0 || params.omega_gi.size() != k || params.omega_lc.size() != k || params.omega_cls.size() != k) {
    throw ConfigError("fusion weights cover " + std::to_string(params.omega_gi.size()) +
                      " layers but " + std::to_string(k) + " consistency layers are present");
  }
}

}  // namespace

RefinementHead RefinementHead::initialize(int in_channels, int hidden, Rng& rng) {
  RefinementHead head = zeros(in_channels, hidden);
  head.conv1_weight = gaussian(hidden, in_channels * 9, std::sqrt(2.0 / (in_channels * 9)), rng);
  head.conv2_weight = gaussian(1, hidden * 9, std::sqrt(1.0 / (hidden * 9)), rng);
  return head;
}

RefinementHead RefinementHead::zeros(int in_channels, int hidden) {
  RefinementHead head;
  head.in_channels = in_channels;
  head.hidden = hidden;
  head.conv1_weight = Matrix::Zero(hidden, in_channels * 9);
  head.conv1_bias = Vector::Zero(hidden);
  head.conv2_weight = Matrix::Zero(1, hidden * 9);
  head.conv2_bias = Vector::Zero(1);
  return head;
}

std::size_t RefinementHead::parameter_count() const noexcept {
  return static_cast<std::size_t>(conv1_weight.size() + conv1_bias.size() + conv2_weight.size() +
                                  conv2_bias.size());
}

FusionParams FusionParams::initialize(int num_levels, int feature_dim, int hidden, Rng& rng) {
  FusionParams p;
  const double w = 1.0 / num_levels;
  p.omega_gi = Vector::Constant(num_levels, w);
  p.omega_lc = Vector::Constant(num_levels, w);
  p.omega_cls = Vector::Constant(num_levels, w);
  p.head = RefinementHead::initialize(2 + feature_dim, hidden, rng);
  return p;
}

FusionParams FusionParams::zeros(int num_levels, int feature_dim, int hidden) {
  FusionParams p;
  p.omega_gi = Vector::Zero(num_levels);
  p.omega_lc = Vector::Zero(num_levels);
  p.omega_cls = Vector::Zero(num_levels);
  p.head = RefinementHead::zeros(2 + feature_dim, hidden);
  return p;
}

AggregatedMaps aggregate_layers(const ConsistencyMaps& maps, const FusionParams& params) {
  check_levels(maps, params);
  const auto n = maps.layers.front().patch_cls.size();
  AggregatedMaps out{Vector::Zero(n), Vector::Zero(n)};
  for (std::size_t i = 0; i < maps.layers.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    out.gi += params.omega_gi(idx) * maps.layers[i].patch_cls;
    out.lc += params.omega_lc(idx) * maps.layers[i].patch_text;
  }
  return out;
}

Matrix patch_grid(const Vector& scores) {
  const int g = grid_side_of(scores.size());
  Matrix grid(g, g);
  for (int y = 0; y < g; ++y)
    for (int x = 0; x < g; ++x) grid(y, x) = scores(y * g + x);
  return grid;
}

Matrix to_aux_logits(const Vector& scores, int image_size) {
  return resize_bilinear(patch_grid(scores), image_size, image_size);
}

Matrix refine_patch_grid(const Vector& gi, const Vector& lc, const Matrix& shallow_patches,
                         const RefinementHead& head, HeadCache* cache) {
  const auto n = gi.size();
  if (lc.size() != n || shallow_patches.rows() != n ||
      shallow_patches.cols() + 2 != head.in_channels) {
    throw ConfigError("refinement head expects " + std::to_string(head.in_channels) +
                      " channels over " + std::to_string(n) + " patches");
  }
  const int g = grid_side_of(n);

  Matrix x(head.in_channels, n);
  x.row(0) = gi.transpose();
  x.row(1) = lc.transpose();
  x.bottomRows(shallow_patches.cols()) = shallow_patches.transpose();

  Matrix cols1 = im2col(x, g);
  Matrix pre = head.conv1_weight * cols1;
  pre.colwise() += head.conv1_bias;
  const Matrix act = pre.unaryExpr([](double v) { return gelu(v); });
  Matrix cols2 = im2col(act, g);
  Matrix out = head.conv2_weight * cols2;
  out.array() += head.conv2_bias(0);

  Matrix grid(g, g);
  for (int y = 0; y < g; ++y)
    for (int xx = 0; xx < g; ++xx) grid(y, xx) = out(0, y * g + xx);

  if (cache) {
    cache->grid = g;
    cache->cols1 = std::move(cols1);
    cache->pre_act = std::move(pre);
    cache->cols2 = std::move(cols2);
  }
  return grid;
}

Matrix decode_final(const Vector& gi, const Vector& lc, const Matrix& shallow_patches,
                    const FusionParams& params, int image_size, HeadCache* cache) {
  const Matrix grid = refine_patch_grid(gi, lc, shallow_patches, params.head, cache);
  return resize_bilinear(grid, image_size, image_size);
}

double predict_ratio_logit(const ConsistencyMaps& maps, const FusionParams& params) {
  check_levels(maps, params);
  double s = 0.0;
  for (std::size_t i = 0; i < maps.layers.size(); ++i) {
    s += params.omega_cls(static_cast<Eigen::Index>(i)) * maps.layers[i].cls_text;
  }
  return s;
}

Vector aux_logits_backward(const Matrix& d_logits, int grid) {
  const Matrix uy = bilinear_weights(static_cast<int>(d_logits.rows()), grid);
  const Matrix ux = bilinear_weights(static_cast<int>(d_logits.cols()), grid);
  const Matrix d_grid = uy.transpose() * d_logits * ux;
  Vector d(static_cast<Eigen::Index>(grid) * grid);
  for (int y = 0; y < grid; ++y)
    for (int x = 0; x < grid; ++x) d(y * grid + x) = d_grid(y, x);
  return d;
}

void backprop_decode_final(const FusionParams& params, const HeadCache& cache,
                           const Matrix& d_logits, FusionParams& grad, Vector& d_gi, Vector& d_lc) {
  const auto& head = params.head;
  auto& ghead = grad.head;
  const Vector d_out_vec = aux_logits_backward(d_logits, cache.grid);
  const Matrix d_out = d_out_vec.transpose();  // 1 x N

  ghead.conv2_weight += d_out * cache.cols2.transpose();
  ghead.conv2_bias(0) += d_out.sum();
  const Matrix d_act = col2im(head.conv2_weight.transpose() * d_out, head.hidden, cache.grid);
  const Matrix d_pre = d_act.cwiseProduct(cache.pre_act.unaryExpr([](double v) { return gelu_grad(v); }));

  ghead.conv1_weight += d_pre * cache.cols1.transpose();
  ghead.conv1_bias += d_pre.rowwise().sum();
  // Only the two score channels carry gradient upstream; the shallow
  // channels are frozen backbone features.
  const Matrix d_cols1 = head.conv1_weight.leftCols(2 * 9).transpose() * d_pre;
  const Matrix d_x = col2im(d_cols1, 2, cache.grid);
  d_gi += d_x.row(0).transpose();
  d_lc += d_x.row(1).transpose();
}

void backprop_aggregate(const ConsistencyMaps& maps, const FusionParams& params,
                        const Vector& d_gi, const Vector& d_lc, FusionParams& grad,
                        ConsistencyMaps& d_maps) {
  for (std::size_t i = 0; i < maps.layers.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    grad.omega_gi(idx) += d_gi.dot(maps.layers[i].patch_cls);
    grad.omega_lc(idx) += d_lc.dot(maps.layers[i].patch_text);
    d_maps.layers[i].patch_cls += params.omega_gi(idx) * d_gi;
    d_maps.layers[i].patch_text += params.omega_lc(idx) * d_lc;
  }
}

void backprop_ratio_logit(const ConsistencyMaps& maps, const FusionParams& params, double d_ratio,
                          FusionParams& grad, ConsistencyMaps& d_maps) {
  for (std::size_t i = 0; i < maps.layers.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    grad.omega_cls(idx) += d_ratio * maps.layers[i].cls_text;
    d_maps.layers[i].cls_text += params.omega_cls(idx) * d_ratio;
  }
}

}  // namespace svl
