#include <gtest/gtest.h>

#include "support.hpp"
#include "warmstart/reinit.hpp"

using namespace warmstart;

namespace {

const NetworkSpec kSpec = NetworkSpec::mlp(4, {6, 5}, 3);

ModelParams trained_like(std::uint64_t seed) {
  auto p = init_params(kSpec, seed);
  for (auto& l : p.layers) l.bias = wst::gaussian_matrix(1, l.bias.size(), seed + 100);
  return p;
}

}  // namespace

TEST(ShrinkPerturb, IdentityEndpointIsBitExact) {
  const auto p = trained_like(1);
  EXPECT_EQ(shrink_perturb(p, {1.0, 0.0}, 42), p);
}

TEST(ShrinkPerturb, RestartEndpointIsBitExact) {
  const auto p = trained_like(1);
  EXPECT_EQ(shrink_perturb(p, {0.0, 1.0}, 42), init_params(kSpec, 42));
  EXPECT_EQ(apply_initializer(p, Initializer::random(), 42), init_params(kSpec, 42));
}

TEST(ShrinkPerturb, ElementwiseFormula) {
  const auto p = trained_like(2);
  const auto fresh = init_params(kSpec, 9);
  const auto q = shrink_perturb(p, {0.6, 0.01}, 9);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    for (Eigen::Index i = 0; i < p.layers[l].weight.size(); ++i) {
      EXPECT_DOUBLE_EQ(q.layers[l].weight.data()[i],
                       0.6 * p.layers[l].weight.data()[i] + 0.01 * fresh.layers[l].weight.data()[i]);
    }
    for (Eigen::Index i = 0; i < p.layers[l].bias.size(); ++i) {
      // fresh biases are zero, so biases only shrink
      EXPECT_DOUBLE_EQ(q.layers[l].bias[i], 0.6 * p.layers[l].bias[i]);
    }
  }
}

TEST(ShrinkPerturb, PureShrinkScalesNorm) {
  const auto p = trained_like(3);
  EXPECT_NEAR(param_norm(shrink_perturb(p, {0.3, 0.0}, 1)), 0.3 * param_norm(p), 1e-12);
}

TEST(ShrinkPerturb, DeterministicPerSeed) {
  const auto p = trained_like(4);
  EXPECT_EQ(shrink_perturb(p, {0.5, 0.1}, 7), shrink_perturb(p, {0.5, 0.1}, 7));
  EXPECT_FALSE(shrink_perturb(p, {0.5, 0.1}, 7) == shrink_perturb(p, {0.5, 0.1}, 8));
}

TEST(ShrinkPerturb, LastLayerScopeLeavesEarlierLayers) {
  const auto p = trained_like(5);
  const auto q = shrink_perturb(p, {0.0, 1.0, ReinitScope::last_layer_only}, 11);
  EXPECT_EQ(q.layers[0], p.layers[0]);
  EXPECT_EQ(q.layers[1], p.layers[1]);
  EXPECT_EQ(q.layers[2], init_params(kSpec, 11).layers[2]);
}

TEST(ShrinkPerturb, RejectsOutOfRangeArguments) {
  const auto p = trained_like(6);
  EXPECT_THROW(shrink_perturb(p, {1.5, 0.0}, 0), InputError);
  EXPECT_THROW(shrink_perturb(p, {-0.1, 0.0}, 0), InputError);
  EXPECT_THROW(shrink_perturb(p, {0.5, -1.0}, 0), InputError);
  EXPECT_THROW(scale_params(p, 0.0), InputError);
}

TEST(NoiseOnly, AddsFreshDrawWithoutShrinking) {
  const auto p = trained_like(7);
  const auto q = noise_only(p, 0.1, 3);
  const auto fresh = init_params(kSpec, 3);
  EXPECT_DOUBLE_EQ(q.layers[1].weight(2, 3), p.layers[1].weight(2, 3) + 0.1 * fresh.layers[1].weight(2, 3));
}

TEST(Initializer, DescribeAndParse) {
  EXPECT_EQ(Initializer::warm().describe(), "warm");
  EXPECT_EQ(Initializer::random().describe(), "random");
  EXPECT_EQ(Initializer::shrink_perturb(0.6, 0.01).describe(), "shrink_perturb(0.6,0.01)");
  EXPECT_EQ(Initializer::noise_only(0.01).describe(), "noise_only(0.01)");
  EXPECT_EQ(init_policy_from_string("last_layer"), InitPolicy::last_layer);
  EXPECT_THROW(init_policy_from_string("warmish"), InputError);
}

TEST(Initializer, WarmReturnsPreviousUnchanged) {
  const auto p = trained_like(8);
  EXPECT_EQ(apply_initializer(p, Initializer::warm(), 1), p);
}
