#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "adaptbound/deltaiot_sim.hpp"
#include "adaptbound/numeric.hpp"

using namespace adaptbound;
using namespace adaptbound::deltaiot;

namespace {

// Mote 1 sends straight to the gateway.
NetworkTopology single_link() {
  NetworkTopology t;
  t.name = "single";
  t.links = {Link{1, 0, LinkParams{0.0, 1.0, 0.0, 1.0}, 0.0}};
  t.motes = {Mote{1, 1.0, {0}, 0.0}};
  t.validate();
  return t;
}

double mc_mean(const NetworkRunModel& model, std::uint64_t runs, std::uint64_t seed) {
  CompensatedSum sum;
  for (std::uint64_t r = 0; r < runs; ++r) sum.add(model.simulate(derive_seed(seed, r)));
  return sum.value() / static_cast<double>(runs);
}

Environment random_environment(const NetworkTopology& topo, std::mt19937_64& rng) {
  Environment env = initial_environment(topo);
  std::uniform_real_distribution<double> inter(0.0, 6.0);
  std::uniform_real_distribution<double> load(0.5, 2.0);
  for (double& i : env.interference) i = inter(rng);
  for (double& l : env.load) l = load(rng);
  return env;
}

}  // namespace

TEST(Enumerate, DeskHas256Options) {
  const auto topo = desk_topology();
  const auto options = enumerate_options(topo);
  ASSERT_EQ(options.size(), 256u);
  for (std::uint64_t i = 0; i < options.size(); ++i) EXPECT_EQ(options[i].id, i);
}

TEST(Enumerate, FullHas4096Options) {
  const auto topo = full_topology();
  EXPECT_EQ(topo.dimensions.size(), 12u);
  EXPECT_EQ(enumerate_options(topo).size(), 4096u);
}

TEST(Enumerate, EncodeDecodeRoundTrip) {
  const auto topo = full_topology();
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::uint64_t> pick(0, topo.space_size() - 1);
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t id = pick(rng);
    const AdaptationOption o = decode(topo, id);
    EXPECT_EQ(encode(topo, o.choices), id);
  }
  EXPECT_THROW(decode(topo, topo.space_size()), PreconditionError);
}

TEST(Enumerate, MixedRadixHasFirstDimensionMostSignificant) {
  NetworkTopology t = desk_topology();
  t.dimensions[7].values = {1.0, 2.0, 3.0};  // last dimension ternary
  t.validate();
  EXPECT_EQ(t.space_size(), 384u);
  EXPECT_EQ(decode(t, 1).choices.back(), 1u);
  EXPECT_EQ(decode(t, 3).choices.back(), 0u);
  EXPECT_EQ(decode(t, 3).choices[6], 1u);
}

TEST(TopologyValidation, RejectsMalformedGraphs) {
  NetworkTopology t = single_link();
  t.links[0].parent = 1;
  EXPECT_THROW(t.validate(), PreconditionError);
  t = desk_topology();
  t.motes[5].links.clear();
  EXPECT_THROW(t.validate(), PreconditionError);
  t = desk_topology();
  t.dimensions.push_back({6, SettingKind::TrafficSplit, {0.0, 1.0}});  // mote 6 has one parent
  EXPECT_THROW(t.validate(), PreconditionError);
  EXPECT_THROW(topology_preset("nope"), PreconditionError);
}

TEST(LinkDelivery, ClampAndShape) {
  const LinkParams p{4.0, 1.0, 3.0, 0.9};
  EXPECT_EQ(link_delivery_prob(p, 1.0, 1e6), kMinDelivery);
  EXPECT_EQ(link_delivery_prob(p, 1e6, 0.0), kMaxDelivery);
  EXPECT_LT(link_delivery_prob(p, 1.0, 2.0), link_delivery_prob(p, 2.0, 2.0));
  EXPECT_GT(link_delivery_prob(p, 1.0, 2.0), link_delivery_prob(p, 1.0, 2.5));
  // base + gain * power - interference - threshold = 0
  EXPECT_DOUBLE_EQ(link_delivery_prob(p, 1.0, 2.0), 0.5);
}

TEST(TrueLoss, PerfectLinksLoseNothing) {
  const auto topo = desk_topology();
  const auto env = initial_environment(topo);
  const std::vector<double> ones(topo.links.size(), 1.0);
  for (const auto& o : enumerate_options(topo)) {
    EXPECT_EQ(expected_loss(topo, o, env, ones), 0.0);
    EXPECT_EQ(NetworkRunModel(topo, o, env, ones).simulate(o.id), 0.0);
  }
}

TEST(TrueLoss, DeadLinksLoseEverything) {
  const auto topo = desk_topology();
  const auto env = initial_environment(topo);
  const std::vector<double> zeros(topo.links.size(), 0.0);
  const auto o = decode(topo, 77);
  EXPECT_EQ(expected_loss(topo, o, env, zeros), 100.0);
  EXPECT_EQ(NetworkRunModel(topo, o, env, zeros).simulate(3), 1.0);
}

TEST(TrueLoss, SingleLink) {
  const auto topo = single_link();
  const auto env = initial_environment(topo);
  const AdaptationOption o = decode(topo, 0);
  const double q = link_probabilities(topo, o, env)[0];
  EXPECT_DOUBLE_EQ(q, 0.5);
  EXPECT_DOUBLE_EQ(true_expected_loss(topo, o, env), 100.0 * (1.0 - q));
  const std::vector<double> custom{0.83};
  EXPECT_NEAR(expected_loss(topo, o, env, custom), 17.0, 1e-12);
}

TEST(TrueLoss, HandComputedTwoHopSplit) {
  // 1 -> 0, 2 -> {0, 1}; mote 2 splits 30% to the gateway
  NetworkTopology t;
  t.name = "split";
  t.links = {Link{1, 0, {}, 0.0}, Link{2, 0, {}, 0.0}, Link{2, 1, {}, 0.0}};
  t.motes = {Mote{1, 1.0, {0}, 0.0}, Mote{2, 1.0, {1, 2}, 0.0}};
  t.dimensions = {{2, SettingKind::TrafficSplit, {0.3}}};
  t.validate();
  const auto env = initial_environment(t);
  const std::vector<double> q{0.9, 0.6, 0.8};
  // reach(1) = 0.9; reach(2) = 0.3 * 0.6 + 0.7 * 0.8 * 0.9 = 0.684
  const double expected = 100.0 * (1.0 - (0.9 + 0.684) / 2.0);
  EXPECT_NEAR(expected_loss(t, decode(t, 0), env, q), expected, 1e-12);
  const NetworkRunModel model(t, decode(t, 0), env, q);
  EXPECT_NEAR(100.0 * mc_mean(model, 200000, 4), expected, 0.25);
}

TEST(Simulate, ConservesPacketsAndIsDeterministic) {
  const auto topo = desk_topology();
  const auto env = initial_environment(topo);
  const NetworkRunModel model(topo, decode(topo, 200), env);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto t = model.run(seed);
    EXPECT_EQ(t.delivered + t.lost, t.generated);
    EXPECT_EQ(t.generated, model.packets_per_period());
    EXPECT_EQ(model.simulate(seed), simulate_run(topo, decode(topo, 200), env, seed));
    const double f = model.simulate(seed);
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
  }
}

TEST(Simulate, MonteCarloAgreesWithAnalyticLoss) {
  const auto topo = desk_topology();
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::uint64_t> pick(0, topo.space_size() - 1);
  for (int pair = 0; pair < 4; ++pair) {
    const auto option = decode(topo, pick(rng));
    const auto env = random_environment(topo, rng);
    const std::uint64_t runs = 40000;
    const double mc = mc_mean(NetworkRunModel(topo, option, env), runs, 1000 + pair);
    // three standard errors of a [0,1] mean
    EXPECT_NEAR(mc, true_expected_loss(topo, option, env) / 100.0, 3.0 * std::sqrt(0.25 / runs));
  }
}

TEST(TrueLoss, RaisingEveryPowerLevelDoesNotHurt) {
  const auto topo = desk_topology();
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto env = random_environment(topo, rng);
    for (std::uint64_t id = 0; id < topo.space_size(); id += 7) {
      AdaptationOption low = decode(topo, id);
      AdaptationOption high = low;
      for (std::size_t k = 0; k < topo.dimensions.size(); ++k) {
        if (topo.dimensions[k].kind == SettingKind::PowerLevel) {
          low.choices[k] = 0;
          high.choices[k] = topo.dimensions[k].values.size() - 1;
        }
      }
      EXPECT_LE(true_expected_loss(topo, high, env), true_expected_loss(topo, low, env) + 1e-12);
    }
  }
}

TEST(EnvironmentStep, ZeroWidthWalkIsIdentity) {
  const auto topo = desk_topology();
  const auto env = initial_environment(topo);
  WalkParams still;
  still.interference_step = 0.0;
  still.load_step = 0.0;
  const Environment next = environment_step(env, still, 5);
  EXPECT_EQ(next.interference, env.interference);
  EXPECT_EQ(next.load, env.load);
  EXPECT_EQ(next.cycle, env.cycle + 1);
}

TEST(EnvironmentStep, StaysWithinClampsAndReplays) {
  const auto topo = desk_topology();
  const WalkParams walk;
  Environment a = initial_environment(topo);
  Environment b = a;
  for (std::uint64_t s = 0; s < 100000; ++s) {
    a = environment_step(a, walk, derive_seed(9, s));
    for (double i : a.interference) ASSERT_TRUE(i >= 0.0 && i <= walk.interference_max);
    for (double l : a.load) ASSERT_TRUE(l >= walk.load_min && l <= walk.load_max);
  }
  for (std::uint64_t s = 0; s < 100000; ++s) b = environment_step(b, walk, derive_seed(9, s));
  EXPECT_EQ(a.interference, b.interference);
  EXPECT_EQ(a.load, b.load);
}

TEST(Features, LayoutAndLocality) {
  const auto topo = desk_topology();
  const auto env = initial_environment(topo);
  const auto options = enumerate_options(topo);
  const std::size_t n = feature_length(topo);
  EXPECT_EQ(n, 22u);  // 8 settings + 8 links + 6 motes

  std::set<std::vector<double>> settings;
  for (const auto& o : options) {
    const auto x = features(topo, o, env);
    ASSERT_EQ(x.size(), n);
    settings.insert(std::vector<double>(x.begin(), x.begin() + 8));
  }
  EXPECT_EQ(settings.size(), options.size());

  Environment other = env;
  other.interference[3] += 1.25;
  const auto x1 = features(topo, options[10], env);
  const auto x2 = features(topo, options[10], other);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == 8 + 3) {
      EXPECT_NE(x1[j], x2[j]);
    } else {
      EXPECT_EQ(x1[j], x2[j]);
    }
  }
}
