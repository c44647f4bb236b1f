#pragma once

// Desk-scale analogue of a DeltaIoT-style multi-hop sensor network.
//
// Motes forward packets over lossy links toward a single gateway (node 0).
// Each mote has one or two parents; with two parents a traffic split decides
// which link a packet takes. Link delivery follows a logistic SNR curve whose
// margin improves with the sender's power level and degrades with the link's
// interference plus crosstalk from other motes transmitting to the same
// receiver. The adaptation space is the cartesian product of per-mote
// setting choices (power level, traffic split).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adaptbound/errors.hpp"
#include "adaptbound/random.hpp"

namespace adaptbound::deltaiot {

inline constexpr std::size_t kGateway = 0;
inline constexpr double kMinDelivery = 0.005;
inline constexpr double kMaxDelivery = 0.995;

struct LinkParams {
  double base_snr = 0.0;
  double power_gain = 1.0;
  double threshold = 0.0;
  double steepness = 1.0;
};

struct Link {
  std::size_t child = 0;
  std::size_t parent = 0;
  LinkParams params;
  double initial_interference = 0.0;
};

struct Mote {
  std::size_t node = 0;            // 1..K; mote index is node - 1
  double traffic_rate = 1.0;       // packets per period at load 1.0
  std::vector<std::size_t> links;  // indices into NetworkTopology::links, 1 or 2
  double default_power = 0.0;      // used when no power dimension covers the mote
};

enum class SettingKind { PowerLevel, TrafficSplit };

// One independent choice of the adaptation space. TrafficSplit values are the
// fraction of traffic sent over the mote's first link.
struct SettingDimension {
  std::size_t mote_node = 0;
  SettingKind kind = SettingKind::PowerLevel;
  std::vector<double> values;
};

struct NetworkTopology {
  std::string name;
  std::vector<Mote> motes;
  std::vector<Link> links;
  std::vector<SettingDimension> dimensions;
  // Interference added to a link per unit of power (weighted by traffic share)
  // of every other mote transmitting to the same receiver.
  double crosstalk = 0.0;

  void validate() const {
    require(!motes.empty(), "topology needs at least one mote");
    for (std::size_t i = 0; i < motes.size(); ++i) {
      const Mote& mote = motes[i];
      require(mote.node == i + 1, "mote nodes must be numbered 1..K in order");
      require(mote.links.size() == 1 || mote.links.size() == 2, "every mote has 1 or 2 parents");
      require(mote.traffic_rate > 0.0, "traffic_rate > 0");
      for (std::size_t l : mote.links) {
        require(l < links.size(), "mote references unknown link");
        require(links[l].child == mote.node, "link child does not match its mote");
        // parent < child makes the graph acyclic with every path ending at the gateway
        require(links[l].parent < links[l].child, "link parent must precede child");
      }
    }
    for (const Link& link : links) {
      require(link.child >= 1 && link.child <= motes.size(), "link child out of range");
      require(link.params.steepness > 0.0, "steepness > 0");
    }
    for (std::size_t a = 0; a < dimensions.size(); ++a) {
      const SettingDimension& dim = dimensions[a];
      require(dim.mote_node >= 1 && dim.mote_node <= motes.size(), "dimension mote out of range");
      require(!dim.values.empty(), "dimension needs at least one value");
      if (dim.kind == SettingKind::TrafficSplit) {
        require(motes[dim.mote_node - 1].links.size() == 2, "split dimension needs two parents");
        for (double v : dim.values) require(v >= 0.0 && v <= 1.0, "split values lie in [0, 1]");
      }
      for (std::size_t b = 0; b < a; ++b) {
        require(!(dimensions[b].mote_node == dim.mote_node && dimensions[b].kind == dim.kind),
                "duplicate setting dimension");
      }
    }
  }

  [[nodiscard]] std::uint64_t space_size() const noexcept {
    std::uint64_t size = 1;
    for (const auto& dim : dimensions) size *= dim.values.size();
    return size;
  }
};

struct Environment {
  std::vector<double> interference;  // per link
  std::vector<double> load;          // per mote, multiplies traffic_rate
  std::uint64_t cycle = 0;
};

struct WalkParams {
  double interference_step = 0.5;  // half-width of the uniform increment
  double interference_max = 6.0;
  double load_step = 0.1;
  double load_min = 0.5;
  double load_max = 2.0;

  void validate() const {
    require(interference_step >= 0.0 && load_step >= 0.0, "walk steps must be >= 0");
    require(interference_max >= 0.0, "interference_max >= 0");
    require(load_min > 0.0 && load_min <= load_max, "0 < load_min <= load_max");
  }
};

struct AdaptationOption {
  std::uint64_t id = 0;
  std::vector<std::size_t> choices;  // value index per dimension
};

// ---------------------------------------------------------------------------
// Presets

namespace detail {

inline Link make_link(std::size_t child, std::size_t parent, double base_snr, double interference) {
  return Link{child, parent, LinkParams{base_snr, 1.0, 3.0, 0.9}, interference};
}

inline NetworkTopology assemble(std::string name, std::vector<double> rates,
                                std::vector<Link> links,
                                std::vector<SettingDimension> dimensions) {
  NetworkTopology topo;
  topo.name = std::move(name);
  topo.crosstalk = 0.3;
  topo.links = std::move(links);
  topo.dimensions = std::move(dimensions);
  for (std::size_t i = 0; i < rates.size(); ++i) {
    Mote mote;
    mote.node = i + 1;
    mote.traffic_rate = rates[i];
    mote.default_power = 2.0;
    for (std::size_t l = 0; l < topo.links.size(); ++l) {
      if (topo.links[l].child == mote.node) mote.links.push_back(l);
    }
    topo.motes.push_back(std::move(mote));
  }
  topo.validate();
  return topo;
}

inline SettingDimension power(std::size_t mote) {
  return {mote, SettingKind::PowerLevel, {1.0, 3.0}};
}

inline SettingDimension split(std::size_t mote) {
  return {mote, SettingKind::TrafficSplit, {0.0, 1.0}};
}

}  // namespace detail

/// Six motes in two layers, eight binary choices, 256 options.
///
///   layer 1: 1, 2, 3 -> gateway
///   layer 2: 4 -> {1, 2}, 5 -> {2, 3}, 6 -> 3
///
/// Choices: power of motes 1..6, split of motes 4 and 5.
inline NetworkTopology desk_topology() {
  using detail::make_link;
  std::vector<Link> links{
      make_link(1, 0, 7.5, 1.5), make_link(2, 0, 7.0, 2.0), make_link(3, 0, 8.0, 1.0),
      make_link(4, 1, 6.5, 2.5), make_link(4, 2, 7.5, 1.5), make_link(5, 2, 7.0, 1.0),
      make_link(5, 3, 6.5, 2.0), make_link(6, 3, 7.0, 1.5),
  };
  std::vector<SettingDimension> dims{
      detail::power(1), detail::power(2), detail::power(3), detail::power(4),
      detail::split(4), detail::power(5), detail::split(5), detail::power(6),
  };
  return detail::assemble("desk", {2.0, 2.0, 2.0, 3.0, 3.0, 3.0}, std::move(links),
                          std::move(dims));
}

/// Eight motes in three layers, twelve binary choices, 4096 options.
///
///   layer 1: 1, 2, 3 -> gateway
///   layer 2: 4 -> {1, 2}, 5 -> {2, 3}, 6 -> {1, 3}, 7 -> 3
///   layer 3: 8 -> {4, 5}
inline NetworkTopology full_topology() {
  using detail::make_link;
  std::vector<Link> links{
      make_link(1, 0, 7.5, 1.5), make_link(2, 0, 7.0, 2.0), make_link(3, 0, 8.0, 1.0),
      make_link(4, 1, 6.5, 2.5), make_link(4, 2, 7.5, 1.5), make_link(5, 2, 7.0, 1.0),
      make_link(5, 3, 6.5, 2.0), make_link(6, 1, 7.0, 2.0), make_link(6, 3, 7.5, 1.0),
      make_link(7, 3, 7.0, 1.5), make_link(8, 4, 6.5, 1.5), make_link(8, 5, 7.0, 2.5),
  };
  std::vector<SettingDimension> dims{
      detail::power(1), detail::power(2), detail::power(3), detail::power(4),
      detail::split(4), detail::power(5), detail::split(5), detail::power(6),
      detail::split(6), detail::power(7), detail::power(8), detail::split(8),
  };
  return detail::assemble("full", {2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 3.0}, std::move(links),
                          std::move(dims));
}

inline NetworkTopology topology_preset(const std::string& name) {
  if (name == "desk") return desk_topology();
  if (name == "full") return full_topology();
  throw PreconditionError("unknown topology preset '" + name + "'");
}

// ---------------------------------------------------------------------------
// Adaptation space. Ids are mixed-radix numbers with dimension 0 as the most
// significant digit.

inline std::uint64_t encode(const NetworkTopology& topo, std::span<const std::size_t> choices) {
  require(choices.size() == topo.dimensions.size(), "one choice per dimension");
  std::uint64_t id = 0;
  for (std::size_t k = 0; k < choices.size(); ++k) {
    const std::size_t radix = topo.dimensions[k].values.size();
    require(choices[k] < radix, "choice index out of range");
    id = id * radix + choices[k];
  }
  return id;
}

inline AdaptationOption decode(const NetworkTopology& topo, std::uint64_t id) {
  require(id < topo.space_size(), "option id out of range");
  AdaptationOption option;
  option.id = id;
  option.choices.resize(topo.dimensions.size());
  for (std::size_t k = topo.dimensions.size(); k-- > 0;) {
    const std::size_t radix = topo.dimensions[k].values.size();
    option.choices[k] = static_cast<std::size_t>(id % radix);
    id /= radix;
  }
  return option;
}

inline std::vector<AdaptationOption> enumerate_options(const NetworkTopology& topo) {
  topo.validate();
  const std::uint64_t size = topo.space_size();
  std::vector<AdaptationOption> options;
  options.reserve(size);
  for (std::uint64_t id = 0; id < size; ++id) options.push_back(decode(topo, id));
  return options;
}

struct MoteSettings {
  double power = 0.0;
  double split = 1.0;  // fraction over the first link
};

inline std::vector<MoteSettings> resolve_settings(const NetworkTopology& topo,
                                                  const AdaptationOption& option) {
  require(option.choices.size() == topo.dimensions.size(), "option does not match topology");
  std::vector<MoteSettings> settings(topo.motes.size());
  for (std::size_t i = 0; i < topo.motes.size(); ++i) settings[i].power = topo.motes[i].default_power;
  for (std::size_t k = 0; k < topo.dimensions.size(); ++k) {
    const SettingDimension& dim = topo.dimensions[k];
    const double value = dim.values.at(option.choices[k]);
    MoteSettings& s = settings[dim.mote_node - 1];
    if (dim.kind == SettingKind::PowerLevel) {
      s.power = value;
    } else {
      s.split = value;
    }
  }
  return settings;
}

// ---------------------------------------------------------------------------
// Link and traffic model

/// Logistic SNR-to-delivery curve, clamped to [0.005, 0.995].
inline double link_delivery_prob(const LinkParams& p, double power_level, double interference) {
  const double margin = p.base_snr + p.power_gain * power_level - interference - p.threshold;
  const double q = 1.0 / (1.0 + std::exp(-p.steepness * margin));
  return std::clamp(q, kMinDelivery, kMaxDelivery);
}

inline Environment initial_environment(const NetworkTopology& topo) {
  Environment env;
  env.interference.reserve(topo.links.size());
  for (const Link& link : topo.links) env.interference.push_back(link.initial_interference);
  env.load.assign(topo.motes.size(), 1.0);
  return env;
}

inline void check_environment(const NetworkTopology& topo, const Environment& env) {
  require(env.interference.size() == topo.links.size(), "environment/link count mismatch");
  require(env.load.size() == topo.motes.size(), "environment/mote count mismatch");
}

// Fraction of a mote's traffic that uses link `link_index`.
inline double traffic_share(const NetworkTopology& topo, std::size_t mote_node,
                            std::size_t link_index, double split) {
  const Mote& mote = topo.motes[mote_node - 1];
  if (mote.links.size() == 1) return 1.0;
  return link_index == mote.links[0] ? split : 1.0 - split;
}

/// Delivery probability of every link under `option` in `env`. Interference
/// on a link is the environment reading plus crosstalk * power * traffic share
/// of every other mote sending to the same receiver.
inline std::vector<double> link_probabilities(const NetworkTopology& topo,
                                              const AdaptationOption& option,
                                              const Environment& env) {
  check_environment(topo, env);
  const auto settings = resolve_settings(topo, option);
  std::vector<double> probs(topo.links.size());
  for (std::size_t l = 0; l < topo.links.size(); ++l) {
    const Link& link = topo.links[l];
    double crosstalk = 0.0;
    for (std::size_t o = 0; o < topo.links.size(); ++o) {
      const Link& other = topo.links[o];
      if (other.parent == link.parent && other.child != link.child) {
        const MoteSettings& s = settings[other.child - 1];
        crosstalk += topo.crosstalk * s.power * traffic_share(topo, other.child, o, s.split);
      }
    }
    probs[l] = link_delivery_prob(link.params, settings[link.child - 1].power,
                                  env.interference[l] + crosstalk);
  }
  return probs;
}

/// Packets generated by each mote in one period: max(1, round(rate * load)).
inline std::vector<std::uint32_t> packets_generated(const NetworkTopology& topo,
                                                    const Environment& env) {
  check_environment(topo, env);
  std::vector<std::uint32_t> packets(topo.motes.size());
  for (std::size_t i = 0; i < topo.motes.size(); ++i) {
    const double expected = topo.motes[i].traffic_rate * env.load[i];
    packets[i] = static_cast<std::uint32_t>(std::max(1.0, std::round(expected)));
  }
  return packets;
}

/// Expected packet loss in percent for explicit per-link delivery
/// probabilities: propagates delivery probability from the gateway outward.
inline double expected_loss(const NetworkTopology& topo, const AdaptationOption& option,
                            const Environment& env, std::span<const double> link_probs) {
  require(link_probs.size() == topo.links.size(), "one probability per link");
  const auto settings = resolve_settings(topo, option);
  const auto packets = packets_generated(topo, env);

  // reach[node]: probability that a packet at `node` eventually reaches the gateway
  std::vector<double> reach(topo.motes.size() + 1, 0.0);
  reach[kGateway] = 1.0;
  double generated = 0.0;
  double delivered = 0.0;
  for (std::size_t i = 0; i < topo.motes.size(); ++i) {
    const Mote& mote = topo.motes[i];
    const Link& first = topo.links[mote.links[0]];
    double r = 0.0;
    if (mote.links.size() == 1) {
      r = link_probs[mote.links[0]] * reach[first.parent];
    } else {
      const Link& second = topo.links[mote.links[1]];
      const double s = settings[i].split;
      r = s * link_probs[mote.links[0]] * reach[first.parent] +
          (1.0 - s) * link_probs[mote.links[1]] * reach[second.parent];
    }
    reach[mote.node] = r;
    generated += packets[i];
    delivered += packets[i] * r;
  }
  return 100.0 * (1.0 - delivered / generated);
}

/// Exact expected packet-loss percentage, the ground-truth oracle.
inline double true_expected_loss(const NetworkTopology& topo, const AdaptationOption& option,
                                 const Environment& env) {
  const auto probs = link_probabilities(topo, option, env);
  return expected_loss(topo, option, env, probs);
}

// Precomputed routing for repeated simulation of one (option, env) pair.
// Satisfies smc::StochasticModel.
class NetworkRunModel {
 public:
  NetworkRunModel(const NetworkTopology& topo, const AdaptationOption& option,
                  const Environment& env, std::span<const double> link_probs) {
    require(link_probs.size() == topo.links.size(), "one probability per link");
    const auto settings = resolve_settings(topo, option);
    packets_ = packets_generated(topo, env);
    hops_.resize(topo.motes.size() + 1);
    for (std::size_t i = 0; i < topo.motes.size(); ++i) {
      const Mote& mote = topo.motes[i];
      Hop& hop = hops_[mote.node];
      hop.split = mote.links.size() == 2 ? settings[i].split : 1.0;
      hop.first_parent = topo.links[mote.links[0]].parent;
      hop.first_prob = link_probs[mote.links[0]];
      if (mote.links.size() == 2) {
        hop.second_parent = topo.links[mote.links[1]].parent;
        hop.second_prob = link_probs[mote.links[1]];
      }
    }
    for (auto p : packets_) total_ += p;
  }

  NetworkRunModel(const NetworkTopology& topo, const AdaptationOption& option,
                  const Environment& env)
      : NetworkRunModel(topo, option, env, link_probabilities(topo, option, env)) {}

  struct Tally {
    std::uint64_t generated = 0;
    std::uint64_t delivered = 0;
    std::uint64_t lost = 0;
  };

  // One period: every generated packet hops toward the gateway with an
  // independent Bernoulli delivery draw per hop.
  [[nodiscard]] Tally run(std::uint64_t seed) const noexcept {
    SplitMix64 rng(seed);
    Tally tally;
    for (std::size_t i = 0; i < packets_.size(); ++i) {
      for (std::uint32_t k = 0; k < packets_[i]; ++k) {
        std::size_t node = i + 1;
        while (node != kGateway) {
          const Hop& hop = hops_[node];
          bool first = true;
          if (hop.split < 1.0) first = hop.split > 0.0 && rng.uniform() < hop.split;
          const double q = first ? hop.first_prob : hop.second_prob;
          if (!(rng.uniform() < q)) break;
          node = first ? hop.first_parent : hop.second_parent;
        }
        ++tally.generated;
        if (node == kGateway) {
          ++tally.delivered;
        } else {
          ++tally.lost;
        }
      }
    }
    return tally;
  }

  /// Fraction of generated packets lost in one period, in [0, 1].
  [[nodiscard]] double simulate(std::uint64_t seed) const noexcept {
    const Tally t = run(seed);
    return static_cast<double>(t.lost) / static_cast<double>(t.generated);
  }

  [[nodiscard]] std::uint64_t packets_per_period() const noexcept { return total_; }

 private:
  struct Hop {
    double split = 1.0;
    std::size_t first_parent = kGateway;
    double first_prob = 0.0;
    std::size_t second_parent = kGateway;
    double second_prob = 0.0;
  };

  std::vector<std::uint32_t> packets_;
  std::vector<Hop> hops_;
  std::uint64_t total_ = 0;
};

inline double simulate_run(const NetworkTopology& topo, const AdaptationOption& option,
                           const Environment& env, std::uint64_t seed) {
  return NetworkRunModel(topo, option, env).simulate(seed);
}

/// Bounded random walk on interference and load; deterministic per seed.
inline Environment environment_step(const Environment& env, const WalkParams& walk,
                                    std::uint64_t seed) {
  walk.validate();
  SplitMix64 rng(seed);
  Environment next = env;
  for (double& i : next.interference) {
    i = std::clamp(i + rng.uniform(-walk.interference_step, walk.interference_step), 0.0,
                   walk.interference_max);
  }
  for (double& l : next.load) {
    l = std::clamp(l + rng.uniform(-walk.load_step, walk.load_step), walk.load_min, walk.load_max);
  }
  next.cycle = env.cycle + 1;
  return next;
}

/// Feature layout, length dims + links + motes:
///   [0, dims)                  setting value of each dimension
///   [dims, dims + links)       interference of each link
///   [dims + links, ... + motes) load factor of each mote
inline std::size_t feature_length(const NetworkTopology& topo) noexcept {
  return topo.dimensions.size() + topo.links.size() + topo.motes.size();
}

inline std::vector<double> features(const NetworkTopology& topo, const AdaptationOption& option,
                                    const Environment& env) {
  check_environment(topo, env);
  require(option.choices.size() == topo.dimensions.size(), "option does not match topology");
  std::vector<double> x;
  x.reserve(feature_length(topo));
  for (std::size_t k = 0; k < topo.dimensions.size(); ++k) {
    x.push_back(topo.dimensions[k].values.at(option.choices[k]));
  }
  x.insert(x.end(), env.interference.begin(), env.interference.end());
  x.insert(x.end(), env.load.begin(), env.load.end());
  return x;
}

}  // namespace adaptbound::deltaiot
