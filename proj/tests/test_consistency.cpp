// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "synthetic.hpp"
#include "svl/backbone.hpp"
#include "svl/consistency.hpp"
#include "svl/error.hpp"

namespace svl {
namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector random_unit(int d, Rng& rng) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.normal();
  return v / v.norm();
}

TEST(ProjectUnit, Examples) {
  const Matrix id = Matrix::Identity(2, 2);
  EXPECT_LE((project_unit(vec2(3, 4), id) - vec2(0.6, 0.8)).norm(), 1e-15);
  const Vector u = vec2(0.6, 0.8);
  EXPECT_LE((project_unit(u, id) - u).norm(), 1e-15);
  EXPECT_LE((project_unit(vec2(3, 4), 2.0 * id) - vec2(0.6, 0.8)).norm(), 1e-15);
}

TEST(ProjectUnit, DegenerateRejected) {
  EXPECT_THROW(project_unit(vec2(3, 4), Matrix::Zero(2, 2)), DegenerateProjectionError);
  Matrix tokens = Matrix::Ones(3, 2);
  tokens.row(1).setZero();
  EXPECT_THROW(project_rows_unit(tokens, Matrix::Identity(2, 2)), DegenerateProjectionError);
}

TEST(ClsTextScore, Examples) {
  const Vector e0 = vec2(1, 0), e1 = vec2(0, 1);
  EXPECT_EQ(cls_text_score(e0, e0, 1.0), 1.0);
  EXPECT_EQ(cls_text_score(e0, e1, 7.5), 0.0);
  const Vector at60 = vec2(0.5, std::sqrt(3.0) / 2.0);
  EXPECT_NEAR(cls_text_score(e0, at60, 2.0), 1.0, 1e-15);
}

TEST(PatchScores, Examples) {
  Rng rng(1);
  const Vector c = random_unit(8, rng);
  Matrix same(5, 8);
  for (int i = 0; i < 5; ++i) same.row(i) = c.transpose();
  for (int i = 0; i < 5; ++i) {
    EXPECT_NEAR(patch_cls_scores(same, c, 1.0)(i), 1.0, 1e-15);
    EXPECT_NEAR(patch_text_scores(same, c, 1.0)(i), 1.0, 1e-15);
  }
  EXPECT_EQ(patch_cls_scores(same, c, 0.0), Vector::Zero(5));
  EXPECT_EQ(patch_text_scores(same, c, 0.0), Vector::Zero(5));
}

TEST(PatchScores, MatchPerPatchLoop) {
  Rng rng(2);
  Matrix patches(16, 8);
  for (int i = 0; i < 16; ++i) patches.row(i) = random_unit(8, rng).transpose();
  const Vector c = random_unit(8, rng);
  const Vector t = random_unit(8, rng);
  const Vector gi = patch_cls_scores(patches, c, 3.0);
  const Vector lc = patch_text_scores(patches, t, -2.0);
  for (int i = 0; i < 16; ++i) {
    double dc = 0.0, dt = 0.0;
    for (int k = 0; k < 8; ++k) {
      dc += patches(i, k) * c(k);
      dt += patches(i, k) * t(k);
    }
    EXPECT_NEAR(gi(i), 3.0 * dc, 1e-14);
    EXPECT_NEAR(lc(i), -2.0 * dt, 1e-14);
  }
}

TEST(BuildMaps, IdenticalTokensGiveAlpha) {
  TokenPyramid p;
  Rng rng(3);
  Vector cls(6);
  for (int i = 0; i < 6; ++i) cls(i) = rng.normal();
  Matrix patches(4, 6);
  for (int i = 0; i < 4; ++i) patches.row(i) = cls.transpose();
  p.levels.push_back({cls, patches});
  p.shallow_patches = patches;
  ProjectionSet proj = ProjectionSet::initialize(6, 5, rng);
  proj.patch_proj = proj.cls_proj;
  proj.alpha = 3.5;
  TextReference text{{"x"}, random_unit(5, rng)};
  const ConsistencyMaps maps = build_consistency_maps(p, text, proj);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(maps.layers[0].patch_cls(i), 3.5, 1e-14);
}

TEST(BuildMaps, ZeroTextEmbeddingRejected) {
  BackboneConfig bb;
  Rng rng(4);
  const TokenPyramid p = toy_encode(testing::random_image(64, 64, rng), bb);
  ProjectionSet proj = ProjectionSet::initialize(bb.feature_dim, bb.text_dim, rng);
  TextReference text{{"x"}, Vector::Zero(bb.text_dim)};
  EXPECT_THROW(build_consistency_maps(p, text, proj), DegenerateProjectionError);
  // encode_text only ever yields unit vectors.
  EXPECT_NEAR(encode_text({"x"}, ToyTextEncoder(bb.text_dim, 0)).embedding.norm(), 1.0, 1e-12);
}

TEST(BuildMaps, EqualsManualComposition) {
  BackboneConfig bb;
  Rng rng(5);
  const TokenPyramid p = toy_encode(testing::random_image(64, 64, rng), bb);
  const ProjectionSet proj = ProjectionSet::initialize(bb.feature_dim, bb.text_dim, rng);
  const TextReference text = encode_text({"shadow"}, ToyTextEncoder(bb.text_dim, 1));
  const ConsistencyMaps maps = build_consistency_maps(p, text, proj);
  const Vector t = project_unit(text.embedding, proj.text_proj);
  ASSERT_EQ(maps.layers.size(), p.levels.size());
  for (std::size_t l = 0; l < p.levels.size(); ++l) {
    const Vector c = project_unit(p.levels[l].cls, proj.cls_proj);
    const Matrix units = project_rows_unit(p.levels[l].patches, proj.patch_proj);
    EXPECT_NEAR(maps.layers[l].cls_text, cls_text_score(c, t, proj.beta), 1e-13);
    EXPECT_LE((maps.layers[l].patch_cls - patch_cls_scores(units, c, proj.alpha)).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LE((maps.layers[l].patch_text - patch_text_scores(units, t, proj.gamma)).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(BuildMaps, InputScaleInvariance) {
  BackboneConfig bb;
  Rng rng(6);
  TokenPyramid p = toy_encode(testing::random_image(64, 64, rng), bb);
  const ProjectionSet proj = ProjectionSet::initialize(bb.feature_dim, bb.text_dim, rng);
  TextReference text = encode_text({"shadow"}, ToyTextEncoder(bb.text_dim, 1));
  const ConsistencyMaps base = build_consistency_maps(p, text, proj);
  for (auto& level : p.levels) {
    level.cls *= 3.7;
    level.patches.row(5) *= 0.01;
  }
  text.embedding *= 42.0;
  const ConsistencyMaps scaled = build_consistency_maps(p, text, proj);
  for (std::size_t l = 0; l < base.layers.size(); ++l) {
    EXPECT_NEAR(base.layers[l].cls_text, scaled.layers[l].cls_text, 1e-12);
    EXPECT_LE((base.layers[l].patch_cls - scaled.layers[l].patch_cls).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((base.layers[l].patch_text - scaled.layers[l].patch_text).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(BuildMaps, Boundedness) {
  BackboneConfig bb;
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const TokenPyramid p = toy_encode(testing::random_image(64, 64, rng), bb);
    ProjectionSet proj = ProjectionSet::initialize(bb.feature_dim, bb.text_dim, rng);
    proj.alpha = rng.uniform(-20, 20);
    proj.beta = rng.uniform(-20, 20);
    proj.gamma = rng.uniform(-20, 20);
    const TextReference text = encode_text({"s" + std::to_string(trial)}, ToyTextEncoder(bb.text_dim, 2));
    for (const auto& layer : build_consistency_maps(p, text, proj).layers) {
      EXPECT_LE(std::abs(layer.cls_text), std::abs(proj.beta) * (1 + 1e-12));
      EXPECT_LE(layer.patch_cls.cwiseAbs().maxCoeff(), std::abs(proj.alpha) * (1 + 1e-12));
      EXPECT_LE(layer.patch_text.cwiseAbs().maxCoeff(), std::abs(proj.gamma) * (1 + 1e-12));
    }
  }
}

TEST(Backprop, MatchesFiniteDifferences) {
  BackboneConfig bb;
  bb.image_size = 16;
  bb.patch_size = 4;
  bb.feature_dim = 6;
  bb.text_dim = 5;
  bb.selected_layers = {1, 2};
  Rng rng(8);
  const TokenPyramid p = toy_encode(testing::random_image(16, 16, rng), bb);
  const ProjectionSet proj = ProjectionSet::initialize(6, 5, rng);
  const TextReference text = encode_text({"shadow"}, ToyTextEncoder(5, 1));

  // Random linear functional of every score.
  ConsistencyMaps weights;
  for (int l = 0; l < 2; ++l) {
    LayerScores w;
    w.cls_text = rng.normal();
    w.patch_cls = Vector(16);
    w.patch_text = Vector(16);
    for (int i = 0; i < 16; ++i) {
      w.patch_cls(i) = rng.normal();
      w.patch_text(i) = rng.normal();
    }
    weights.layers.push_back(w);
  }
  auto objective = [&](const ProjectionSet& q) {
    const ConsistencyMaps m = build_consistency_maps(p, text, q);
    double s = 0.0;
    for (int l = 0; l < 2; ++l) {
      s += weights.layers[l].cls_text * m.layers[l].cls_text;
      s += weights.layers[l].patch_cls.dot(m.layers[l].patch_cls);
      s += weights.layers[l].patch_text.dot(m.layers[l].patch_text);
    }
    return s;
  };

  ConsistencyCache cache;
  build_consistency_maps(p, text, proj, &cache);
  ProjectionSet grad = ProjectionSet::zeros(6, 5);
  backprop_consistency(p, text, proj, cache, weights, grad);

  const double h = 1e-6;
  auto check_matrix = [&](Matrix ProjectionSet::*member, const char* name) {
    double diff = 0.0, norm = 0.0;
    for (Eigen::Index i = 0; i < (proj.*member).size(); ++i) {
      ProjectionSet up = proj, down = proj;
      (up.*member).data()[i] += h;
      (down.*member).data()[i] -= h;
      const double fd = (objective(up) - objective(down)) / (2 * h);
      diff += std::pow(fd - (grad.*member).data()[i], 2);
      norm += std::pow(fd, 2);
    }
    EXPECT_LE(std::sqrt(diff / norm), 1e-6) << name;
  };
  check_matrix(&ProjectionSet::text_proj, "text_proj");
  check_matrix(&ProjectionSet::cls_proj, "cls_proj");
  check_matrix(&ProjectionSet::patch_proj, "patch_proj");
  for (auto [member, name] : {std::pair{&ProjectionSet::alpha, "alpha"}, std::pair{&ProjectionSet::beta, "beta"},
                              std::pair{&ProjectionSet::gamma, "gamma"}}) {
    ProjectionSet up = proj, down = proj;
    up.*member += h;
    down.*member -= h;
    const double fd = (objective(up) - objective(down)) / (2 * h);
    EXPECT_NEAR(grad.*member, fd, 1e-6 * std::max(1.0, std::abs(fd))) << name;
  }
}

}  // namespace
}  // namespace svl
