// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "svl/backbone.hpp"
#include "svl/consistency.hpp"
#include "svl/fusion.hpp"
#include "svl/objectives.hpp"

namespace svl {

/// Every trainable parameter of the detector. The same type doubles as the
/// gradient and momentum-buffer container.
struct ModelParams {
  ProjectionSet projections;
  FusionParams fusion;

  static ModelParams initialize(const BackboneConfig& backbone, int head_hidden, std::uint64_t seed);
  ModelParams zeros_like() const;
  std::size_t parameter_count() const;
};

/// A named, contiguous view of one parameter tensor.
struct ParamView {
  std::string name;
  std::span<double> data;
  std::vector<std::int64_t> shape;  // (rows, cols) for matrices, (n) for vectors, () for scalars
  bool weight_decay = true;
};

/// Stable ordering of all parameter tensors. Column-major storage for
/// matrices.
std::vector<ParamView> param_views(ModelParams& params);

struct ForwardCache {
  ConsistencyCache consistency;
  ConsistencyMaps maps;
  AggregatedMaps aggregated;
  HeadCache head;
};

PredictionBundle forward(const ModelParams& params, const TokenPyramid& pyramid,
                         const TextReference& text, int image_size, ForwardCache* cache = nullptr);

/// Accumulates dLoss/dparams into `grads` given dLoss/dbundle.
void backward(const ModelParams& params, const TokenPyramid& pyramid, const TextReference& text,
              const ForwardCache& cache, const BundleGradient& upstream, ModelParams& grads);

}  // namespace svl
