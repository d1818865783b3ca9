// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#include "svl/model.hpp"

#include "svl/rng.hpp"

namespace svl {
namespace {

ParamView matrix_view(std::string name, Matrix& m, bool decay) {
  return {std::move(name), std::span<double>(m.data(), static_cast<std::size_t>(m.size())),
          {m.rows(), m.cols()}, decay};
}

ParamView vector_view(std::string name, Vector& v, bool decay) {
  return {std::move(name), std::span<double>(v.data(), static_cast<std::size_t>(v.size())),
          {v.size()}, decay};
}

ParamView scalar_view(std::string name, double& s) {
  return {std::move(name), std::span<double>(&s, 1), {}, false};
}

}  // namespace

ModelParams ModelParams::initialize(const BackboneConfig& backbone, int head_hidden, std::uint64_t seed) {
  backbone.validate();
  Rng proj_rng(mix_seed(seed, 11));
  Rng head_rng(mix_seed(seed, 12));
  return {ProjectionSet::initialize(backbone.feature_dim, backbone.text_dim, proj_rng),
          FusionParams::initialize(backbone.num_levels(), backbone.feature_dim, head_hidden, head_rng)};
}

ModelParams ModelParams::zeros_like() const {
  return {ProjectionSet::zeros(static_cast<int>(projections.cls_proj.rows()),
                               static_cast<int>(projections.text_proj.cols())),
          FusionParams::zeros(static_cast<int>(fusion.omega_gi.size()), fusion.head.in_channels - 2,
                              fusion.head.hidden)};
}

std::size_t ModelParams::parameter_count() const {
  const auto& p = projections;
  return static_cast<std::size_t>(p.text_proj.size() + p.cls_proj.size() + p.patch_proj.size()) + 3 +
         static_cast<std::size_t>(fusion.omega_gi.size() + fusion.omega_lc.size() +
                                  fusion.omega_cls.size()) +
         fusion.head.parameter_count();
}

std::vector<ParamView> param_views(ModelParams& params) {
  auto& p = params.projections;
  auto& f = params.fusion;
  // Scale factors and fusion weights are excluded from weight decay.
  return {
      matrix_view("projection.text", p.text_proj, true),
      matrix_view("projection.cls", p.cls_proj, true),
      matrix_view("projection.patch", p.patch_proj, true),
      scalar_view("projection.alpha", p.alpha),
      scalar_view("projection.beta", p.beta),
      scalar_view("projection.gamma", p.gamma),
      vector_view("fusion.omega_gi", f.omega_gi, false),
      vector_view("fusion.omega_lc", f.omega_lc, false),
      vector_view("fusion.omega_cls", f.omega_cls, false),
      matrix_view("head.conv1.weight", f.head.conv1_weight, true),
      vector_view("head.conv1.bias", f.head.conv1_bias, true),
      matrix_view("head.conv2.weight", f.head.conv2_weight, true),
      vector_view("head.conv2.bias", f.head.conv2_bias, true),
  };
}

PredictionBundle forward(const ModelParams& params, const TokenPyramid& pyramid,
                         const TextReference& text, int image_size, ForwardCache* cache) {
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.maps = build_consistency_maps(pyramid, text, params.projections, &c.consistency);
  c.aggregated = aggregate_layers(c.maps, params.fusion);

  PredictionBundle bundle;
  bundle.aux_gi = to_aux_logits(c.aggregated.gi, image_size);
  bundle.aux_lc = to_aux_logits(c.aggregated.lc, image_size);
  bundle.final_logits = decode_final(c.aggregated.gi, c.aggregated.lc, pyramid.shallow_patches,
                                     params.fusion, image_size, &c.head);
  bundle.ratio_logit = predict_ratio_logit(c.maps, params.fusion);
  return bundle;
}

void backward(const ModelParams& params, const TokenPyramid& pyramid, const TextReference& text,
              const ForwardCache& cache, const BundleGradient& upstream, ModelParams& grads) {
  const int grid = cache.head.grid;
  Vector d_gi = aux_logits_backward(upstream.aux_gi, grid);
  Vector d_lc = aux_logits_backward(upstream.aux_lc, grid);
  backprop_decode_final(params.fusion, cache.head, upstream.final_logits, grads.fusion, d_gi, d_lc);

  ConsistencyMaps d_maps;
  const auto n = cache.aggregated.gi.size();
  for (std::size_t i = 0; i < cache.maps.layers.size(); ++i) {
    d_maps.layers.push_back({0.0, Vector::Zero(n), Vector::Zero(n)});
  }
  backprop_aggregate(cache.maps, params.fusion, d_gi, d_lc, grads.fusion, d_maps);
  backprop_ratio_logit(cache.maps, params.fusion, upstream.ratio_logit, grads.fusion, d_maps);
  backprop_consistency(pyramid, text, params.projections, cache.consistency, d_maps, grads.projections);
}

}  // namespace svl
