// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "svl/consistency.hpp"
#include "svl/rng.hpp"
#include "svl/types.hpp"

namespace svl {

/// Two 3x3 convolutions (zero padding, stride 1) with a GELU between them,
/// applied on the patch grid. Weights are stored in im2col layout:
/// conv1_weight(h, c*9 + ky*3 + kx) for output channel h and input channel c.
struct RefinementHead {
  int in_channels = 0;
  int hidden = 0;
  Matrix conv1_weight;  // hidden x (in_channels * 9)
  Vector conv1_bias;    // hidden
  Matrix conv2_weight;  // 1 x (hidden * 9)
  Vector conv2_bias;    // 1

  static RefinementHead initialize(int in_channels, int hidden, Rng& rng);
  static RefinementHead zeros(int in_channels, int hidden);
  std::size_t parameter_count() const noexcept;
};

struct FusionParams {
  Vector omega_gi;   // K
  Vector omega_lc;   // K
  Vector omega_cls;  // K, weights of the ratio logit
  RefinementHead head;

  /// Layer weights start at 1/K; the head input is the two score channels
  /// plus the D shallow channels.
  static FusionParams initialize(int num_levels, int feature_dim, int hidden, Rng& rng);
  static FusionParams zeros(int num_levels, int feature_dim, int hidden);
};

struct PredictionBundle {
  Matrix aux_gi;        // H x W logits
  Matrix aux_lc;        // H x W logits
  Matrix final_logits;  // H x W logits
  double ratio_logit = 0.0;
};

struct AggregatedMaps {
  Vector gi;  // N
  Vector lc;  // N
};

AggregatedMaps aggregate_layers(const ConsistencyMaps& maps, const FusionParams& params);

/// Reshapes N scores to the sqrt(N) x sqrt(N) patch grid (row-major).
Matrix patch_grid(const Vector& scores);
/// patch_grid followed by bilinear upsampling to image_size x image_size.
Matrix to_aux_logits(const Vector& scores, int image_size);

struct HeadCache {
  int grid = 0;
  Matrix cols1;    // (C*9) x N
  Matrix pre_act;  // hidden x N
  Matrix cols2;    // (hidden*9) x N
};

/// Runs the refinement head on the patch grid; returns grid x grid logits.
Matrix refine_patch_grid(const Vector& gi, const Vector& lc, const Matrix& shallow_patches,
                         const RefinementHead& head, HeadCache* cache = nullptr);

Matrix decode_final(const Vector& gi, const Vector& lc, const Matrix& shallow_patches,
                    const FusionParams& params, int image_size, HeadCache* cache = nullptr);

double predict_ratio_logit(const ConsistencyMaps& maps, const FusionParams& params);

// Backward passes. All of them accumulate into `grad` and the d_* outputs.

/// Adjoint of to_aux_logits: maps an H x W gradient back to the N scores.
Vector aux_logits_backward(const Matrix& d_logits, int grid);

void backprop_decode_final(const FusionParams& params, const HeadCache& cache,
                           const Matrix& d_logits, FusionParams& grad, Vector& d_gi, Vector& d_lc);

void backprop_aggregate(const ConsistencyMaps& maps, const FusionParams& params,
                        const Vector& d_gi, const Vector& d_lc, FusionParams& grad,
                        ConsistencyMaps& d_maps);

void backprop_ratio_logit(const ConsistencyMaps& maps, const FusionParams& params, double d_ratio,
                          FusionParams& grad, ConsistencyMaps& d_maps);

}  // namespace svl
