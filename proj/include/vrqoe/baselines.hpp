#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "vrqoe/agent.hpp"
#include "vrqoe/env.hpp"

namespace vrqoe {

enum class PolicyKind {
  Original,        // every frame of every character, no extraction
  AttentionOnly,   // full frame rate, field-of-view characters only
  FixedRatio,      // fixed keyframe ratio for visible characters
  Ddpg,            // learned, plain noise exploration during training
  CaiDdpgFullstate,  // learned, causal exploration without state division
  PsCddpg,         // learned, causal exploration with state division
};

std::string to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& name);
bool policy_is_learned(PolicyKind kind);

// A policy maps the current snapshot (and, for learned kinds, the state
// features) onto a feasible action. Heuristic kinds are stateless; learned
// kinds delegate to a trained actor.
class Policy {
 public:
  static Policy original();
  static Policy attention_only();
  static Policy fixed_ratio(double ratio);
  static Policy learned(PolicyKind kind, std::shared_ptr<const DdpgAgent> agent);

  PolicyKind kind() const { return kind_; }
  double ratio() const { return ratio_; }
  std::string name() const;

  Action action(const EnvState& state, const AttentionSnapshot& snapshot,
                const SystemParams& params) const;

 private:
  Policy(PolicyKind kind, double ratio, std::shared_ptr<const DdpgAgent> agent)
      : kind_(kind), ratio_(ratio), agent_(std::move(agent)) {}

  PolicyKind kind_ = PolicyKind::Original;
  double ratio_ = 0.0;
  std::shared_ptr<const DdpgAgent> agent_;
};

Action policy_action(const Policy& policy, const EnvState& state,
                     const AttentionSnapshot& snapshot, const SystemParams& params);

// Builds a policy from its CLI/CSV name ("fixed_33", "ps_cddpg", ...).
// Learned kinds need the trained agent attached.
Policy policy_from_name(const std::string& name,
                        std::shared_ptr<const DdpgAgent> agent = nullptr);

struct EvalRecord {
  int trace_index = 0;
  std::uint64_t seed = 0;
  double mean_reward = 0.0;
  double mean_qoe = 0.0;
  double final_hfqoe = 1.0;
  double success_rate = 0.0;
  DelayBreakdown mean_delays;
  std::vector<double> user_qoe;
};

struct MetricAggregate {
  double mean = 0.0;
  double variance = 0.0;  // across records
};

struct EvalSummary {
  std::vector<EvalRecord> records;
  MetricAggregate reward, qoe, hfqoe, success;
};

// Rolls the policy over every (seed, trace) pair without training and
// aggregates the per-episode metrics.
EvalSummary evaluate(const Policy& policy, const std::vector<SceneTrace>& traces,
                     const SystemParams& sys, const ChannelParams& chan,
                     const std::vector<std::uint64_t>& seeds);

}  // namespace vrqoe
