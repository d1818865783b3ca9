// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#include "svl/consistency.hpp"

#include <algorithm>
#include <string>

#include "svl/error.hpp"

namespace svl {
namespace {

Matrix noise(int rows, int cols, double stddev, Rng& rng) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = stddev * rng.normal();
  return m;
}

[[noreturn]] void degenerate(const char* what, double norm) {
  throw DegenerateProjectionError(std::string("projected ") + what + " has norm " +
                                  std::to_string(norm) + " (<= 1e-12); projection collapsed");
}

// Gradient through u = v / ||v||: dv = (du - u (u . du)) / ||v||.
Vector unit_backward(const Vector& unit, double norm, const Vector& d_unit) {
  return (d_unit - unit * unit.dot(d_unit)) / std::max(norm, kNormFloor);
}

}  // namespace

ProjectionSet ProjectionSet::initialize(int feature_dim, int text_dim, Rng& rng) {
  constexpr double kNoise = 0.02;
  ProjectionSet p;
  p.text_proj = noise(feature_dim, text_dim, kNoise, rng);
  if (feature_dim == text_dim) p.text_proj += Matrix::Identity(feature_dim, text_dim);
  p.cls_proj = Matrix::Identity(feature_dim, feature_dim) + noise(feature_dim, feature_dim, kNoise, rng);
  p.patch_proj = Matrix::Identity(feature_dim, feature_dim) + noise(feature_dim, feature_dim, kNoise, rng);
  return p;
}

ProjectionSet ProjectionSet::zeros(int feature_dim, int text_dim) {
  ProjectionSet p;
  p.text_proj = Matrix::Zero(feature_dim, text_dim);
  p.cls_proj = Matrix::Zero(feature_dim, feature_dim);
  p.patch_proj = Matrix::Zero(feature_dim, feature_dim);
  p.alpha = p.beta = p.gamma = 0.0;
  return p;
}

Vector project_unit(const Vector& v, const Matrix& w) {
  if (w.cols() != v.size()) throw ConfigError("projection expects input dim " + std::to_string(w.cols()));
  const Vector projected = w * v;
  const double norm = projected.norm();
  if (!(norm > kNormFloor)) degenerate("vector", norm);
  return projected / norm;
}

Matrix project_rows_unit(const Matrix& tokens, const Matrix& w) {
  if (w.cols() != tokens.cols()) throw ConfigError("projection expects input dim " + std::to_string(w.cols()));
  Matrix projected = tokens * w.transpose();
  for (Eigen::Index j = 0; j < projected.rows(); ++j) {
    const double norm = projected.row(j).norm();
    if (!(norm > kNormFloor)) degenerate("patch token", norm);
    projected.row(j) /= norm;
  }
  return projected;
}

double cls_text_score(const Vector& cls_unit, const Vector& text_unit, double beta) {
  return beta * cls_unit.dot(text_unit);
}

Vector patch_cls_scores(const Matrix& patch_units, const Vector& cls_unit, double alpha) {
  return alpha * (patch_units * cls_unit);
}

Vector patch_text_scores(const Matrix& patch_units, const Vector& text_unit, double gamma) {
  return gamma * (patch_units * text_unit);
}

ConsistencyMaps build_consistency_maps(const TokenPyramid& pyramid, const TextReference& text,
                                       const ProjectionSet& proj, ConsistencyCache* cache) {
  const Vector text_proj = proj.text_proj * text.embedding;
  const Vector text_unit = project_unit(text.embedding, proj.text_proj);
  if (cache) {
    cache->text_unit = text_unit;
    cache->text_norm = text_proj.norm();
    cache->levels.clear();
  }

  ConsistencyMaps maps;
  maps.layers.reserve(pyramid.levels.size());
  for (const auto& level : pyramid.levels) {
    const Vector cls_unit = project_unit(level.cls, proj.cls_proj);
    const Matrix patch_units = project_rows_unit(level.patches, proj.patch_proj);
    maps.layers.push_back({cls_text_score(cls_unit, text_unit, proj.beta),
                           patch_cls_scores(patch_units, cls_unit, proj.alpha),
                           patch_text_scores(patch_units, text_unit, proj.gamma)});
    if (cache) {
      ConsistencyCache::Level entry;
      entry.cls_unit = cls_unit;
      entry.cls_norm = (proj.cls_proj * level.cls).norm();
      entry.patch_norms = (level.patches * proj.patch_proj.transpose()).rowwise().norm();
      entry.patch_units = patch_units;
      cache->levels.push_back(std::move(entry));
    }
  }
  return maps;
}

void backprop_consistency(const TokenPyramid& pyramid, const TextReference& text,
                          const ProjectionSet& proj, const ConsistencyCache& cache,
                          const ConsistencyMaps& upstream, ProjectionSet& grad) {
  const Vector& t = cache.text_unit;
  Vector d_text_unit = Vector::Zero(t.size());

  for (std::size_t i = 0; i < pyramid.levels.size(); ++i) {
    const auto& level = cache.levels[i];
    const auto& up = upstream.layers[i];
    const Vector& c = level.cls_unit;
    const Matrix& p = level.patch_units;

    Vector d_cls_unit = Vector::Zero(c.size());
    Matrix d_patch_units = Matrix::Zero(p.rows(), p.cols());

    // s_cls = beta <c, t>
    grad.beta += up.cls_text * c.dot(t);
    d_cls_unit += up.cls_text * proj.beta * t;
    d_text_unit += up.cls_text * proj.beta * c;

    // s_gi = alpha P c
    grad.alpha += up.patch_cls.dot(p * c);
    d_patch_units += proj.alpha * up.patch_cls * c.transpose();
    d_cls_unit += proj.alpha * (p.transpose() * up.patch_cls);

    // s_lc = gamma P t
    grad.gamma += up.patch_text.dot(p * t);
    d_patch_units += proj.gamma * up.patch_text * t.transpose();
    d_text_unit += proj.gamma * (p.transpose() * up.patch_text);

    const Vector d_cls_proj = unit_backward(c, level.cls_norm, d_cls_unit);
    grad.cls_proj += d_cls_proj * pyramid.levels[i].cls.transpose();

    // Row-wise unit backward for the patch tokens.
    const Vector row_dots = (p.cwiseProduct(d_patch_units)).rowwise().sum();
    Matrix d_patch_proj = d_patch_units - p.cwiseProduct(row_dots.replicate(1, p.cols()));
    for (Eigen::Index j = 0; j < d_patch_proj.rows(); ++j) {
      d_patch_proj.row(j) /= std::max(level.patch_norms(j), kNormFloor);
    }
    grad.patch_proj += d_patch_proj.transpose() * pyramid.levels[i].patches;
  }

  const Vector d_text_proj = unit_backward(t, cache.text_norm, d_text_unit);
  grad.text_proj += d_text_proj * text.embedding.transpose();
}

}  // namespace svl
