// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "svl/backbone.hpp"
#include "svl/rng.hpp"
#include "svl/types.hpp"

namespace svl {

/// Trainable projections into the shared space, shared by all selected layers.
struct ProjectionSet {
  Matrix text_proj;   // D x D_t
  Matrix cls_proj;    // D x D
  Matrix patch_proj;  // D x D
  double alpha = 10.0;  // patch-[CLS] scale
  double beta = 10.0;   // [CLS]-text scale
  double gamma = 10.0;  // patch-text scale

  /// Identity plus N(0, 0.02^2) noise on the square maps; the rectangular
  /// text map has noise only (plus identity on the leading square block when
  /// D == D_t).
  static ProjectionSet initialize(int feature_dim, int text_dim, Rng& rng);
  static ProjectionSet zeros(int feature_dim, int text_dim);
};

struct LayerScores {
  double cls_text = 0.0;  // s_cls
  Vector patch_cls;       // N, global-injection scores
  Vector patch_text;      // N, local-constraint scores
};

struct ConsistencyMaps {
  std::vector<LayerScores> layers;
};

inline constexpr double kNormFloor = 1e-12;

/// W v / ||W v||. Throws DegenerateProjectionError when ||W v|| <= 1e-12.
Vector project_unit(const Vector& v, const Matrix& w);
/// Row-wise project_unit of an N x D token matrix; returns N x D.
Matrix project_rows_unit(const Matrix& tokens, const Matrix& w);

double cls_text_score(const Vector& cls_unit, const Vector& text_unit, double beta);
Vector patch_cls_scores(const Matrix& patch_units, const Vector& cls_unit, double alpha);
Vector patch_text_scores(const Matrix& patch_units, const Vector& text_unit, double gamma);

/// Intermediate values kept for the backward pass.
struct ConsistencyCache {
  Vector text_unit;
  double text_norm = 0.0;
  struct Level {
    Vector cls_unit;
    double cls_norm = 0.0;
    Matrix patch_units;  // N x D
    Vector patch_norms;  // N
  };
  std::vector<Level> levels;
};

ConsistencyMaps build_consistency_maps(const TokenPyramid& pyramid, const TextReference& text,
                                       const ProjectionSet& proj, ConsistencyCache* cache = nullptr);

/// Accumulates into `grad` the gradient of a scalar loss whose partials with
/// respect to every score are given by `upstream` (same layout as the maps).
void backprop_consistency(const TokenPyramid& pyramid, const TextReference& text,
                          const ProjectionSet& proj, const ConsistencyCache& cache,
                          const ConsistencyMaps& upstream, ProjectionSet& grad);

}  // namespace svl
