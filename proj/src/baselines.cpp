#include "vrqoe/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vrqoe {

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Original: return "original";
    case PolicyKind::AttentionOnly: return "attention_only";
    case PolicyKind::FixedRatio: return "fixed_ratio";
    case PolicyKind::Ddpg: return "ddpg";
    case PolicyKind::CaiDdpgFullstate: return "cai_ddpg_fullstate";
    case PolicyKind::PsCddpg: return "ps_cddpg";
  }
  return "?";
}

PolicyKind policy_kind_from_string(const std::string& name) {
  if (name == "original") return PolicyKind::Original;
  if (name == "attention_only") return PolicyKind::AttentionOnly;
  if (name.rfind("fixed_", 0) == 0) return PolicyKind::FixedRatio;
  if (name == "ddpg") return PolicyKind::Ddpg;
  if (name == "cai_ddpg_fullstate") return PolicyKind::CaiDdpgFullstate;
  if (name == "ps_cddpg") return PolicyKind::PsCddpg;
  throw std::invalid_argument("unknown policy: " + name);
}

Policy policy_from_name(const std::string& name, std::shared_ptr<const DdpgAgent> agent) {
  const PolicyKind kind = policy_kind_from_string(name);
  switch (kind) {
    case PolicyKind::Original: return Policy::original();
    case PolicyKind::AttentionOnly: return Policy::attention_only();
    case PolicyKind::FixedRatio: {
      if (name == "fixed_33") return Policy::fixed_ratio(1.0 / 3.0);
      if (name == "fixed_50") return Policy::fixed_ratio(0.5);
      if (name == "fixed_66") return Policy::fixed_ratio(2.0 / 3.0);
      const int pct = std::stoi(name.substr(6));
      return Policy::fixed_ratio(pct / 100.0);
    }
    default: return Policy::learned(kind, std::move(agent));
  }
}

bool policy_is_learned(PolicyKind kind) {
  return kind == PolicyKind::Ddpg || kind == PolicyKind::CaiDdpgFullstate ||
         kind == PolicyKind::PsCddpg;
}

Policy Policy::original() { return Policy(PolicyKind::Original, 0.0, nullptr); }

Policy Policy::attention_only() { return Policy(PolicyKind::AttentionOnly, 0.0, nullptr); }

Policy Policy::fixed_ratio(double ratio) {
  if (!(ratio > 0.0) || ratio > 1.0)
    throw std::invalid_argument("fixed_ratio: ratio must lie in (0, 1]");
  return Policy(PolicyKind::FixedRatio, ratio, nullptr);
}

Policy Policy::learned(PolicyKind kind, std::shared_ptr<const DdpgAgent> agent) {
  if (!policy_is_learned(kind))
    throw std::invalid_argument("Policy::learned: " + to_string(kind) + " is not a learned kind");
  if (!agent) throw std::invalid_argument("Policy::learned: missing trained agent");
  return Policy(kind, 0.0, std::move(agent));
}

std::string Policy::name() const {
  if (kind_ == PolicyKind::FixedRatio)
    return "fixed_" + std::to_string(static_cast<int>(ratio_ * 100));
  return to_string(kind_);
}

Action Policy::action(const EnvState& state, const AttentionSnapshot& snapshot,
                      const SystemParams& params) const {
  if (policy_is_learned(kind_)) {
    if (!agent_) throw std::logic_error("learned policy has no trained actor attached");
    RawAction raw;
    const Eigen::VectorXd a = agent_->act(state.features);
    raw.v.assign(a.data(), a.data() + a.size());
    return normalize_action(raw, params);
  }

  const int users = params.users;
  Action action;
  action.bandwidth_hz.assign(static_cast<std::size_t>(users), params.total_bandwidth_hz / users);
  action.server_hz.assign(static_cast<std::size_t>(users), params.total_server_hz / users);
  action.keyframes.resize(static_cast<std::size_t>(users));
  action.transmit.resize(static_cast<std::size_t>(users));

  int keyframes = params.max_keyframes();
  if (kind_ == PolicyKind::FixedRatio)
    keyframes = std::clamp(static_cast<int>(std::ceil(ratio_ * params.fps)),
                           static_cast<int>(kMinKeyframes), params.max_keyframes());

  for (int k = 0; k < users; ++k) {
    const std::size_t i = static_cast<std::size_t>(k);
    for (int a = 0; a < kAttentionLevels; ++a) {
      const std::size_t ai = static_cast<std::size_t>(a);
      action.keyframes[i][ai] = keyframes;
      action.transmit[i][ai] = kind_ == PolicyKind::Original ? true : a > 0;
    }
  }
  // Sending every frame needs no keyframe extraction; the fixed-ratio schemes
  // do extract.
  action.extraction = kind_ == PolicyKind::FixedRatio;
  return action;
}

Action policy_action(const Policy& policy, const EnvState& state,
                     const AttentionSnapshot& snapshot, const SystemParams& params) {
  return policy.action(state, snapshot, params);
}

EvalSummary evaluate(const Policy& policy, const std::vector<SceneTrace>& traces,
                     const SystemParams& sys, const ChannelParams& chan,
                     const std::vector<std::uint64_t>& seeds) {
  if (traces.empty()) throw std::invalid_argument("evaluate: no traces");
  if (seeds.empty()) throw std::invalid_argument("evaluate: no seeds");

  VrEnv env(sys, chan);
  EvalSummary summary;
  for (std::uint64_t seed : seeds) {
    for (std::size_t trace_idx = 0; trace_idx < traces.size(); ++trace_idx) {
      EnvState state = env.reset(traces[trace_idx],
                                 mix_seed(seed, seed_stream::kEval, trace_idx));
      EvalRecord rec;
      rec.trace_index = static_cast<int>(trace_idx);
      rec.seed = seed;
      rec.user_qoe.assign(static_cast<std::size_t>(sys.users), 0.0);
      int slots = 0;
      int delivered = 0;
      while (!env.done()) {
        const Action action = policy.action(state, env.snapshot(), sys);
        VrEnv::StepResult result = env.step(action);
        rec.mean_reward += result.reward;
        for (int k = 0; k < sys.users; ++k) {
          const std::size_t i = static_cast<std::size_t>(k);
          rec.user_qoe[i] += result.report.qoe[i];
          rec.mean_delays.upload_s += result.report.delays[i].upload_s;
          rec.mean_delays.extract_s += result.report.delays[i].extract_s;
          rec.mean_delays.download_s += result.report.delays[i].download_s;
          rec.mean_delays.reconstruct_s += result.report.delays[i].reconstruct_s;
          if (result.report.delivered[i]) ++delivered;
        }
        rec.final_hfqoe = result.report.hfqoe;
        state = std::move(result.state);
        ++slots;
      }
      const double user_slots = static_cast<double>(slots) * sys.users;
      rec.mean_reward /= slots;
      for (double& q : rec.user_qoe) q /= slots;
      rec.mean_qoe = std::accumulate(rec.user_qoe.begin(), rec.user_qoe.end(), 0.0) / sys.users;
      rec.success_rate = delivered / user_slots;
      rec.mean_delays.upload_s /= user_slots;
      rec.mean_delays.extract_s /= user_slots;
      rec.mean_delays.download_s /= user_slots;
      rec.mean_delays.reconstruct_s /= user_slots;
      summary.records.push_back(std::move(rec));
    }
  }

  const auto aggregate = [&](auto getter) {
    MetricAggregate agg;
    for (const EvalRecord& r : summary.records) agg.mean += getter(r);
    agg.mean /= static_cast<double>(summary.records.size());
    for (const EvalRecord& r : summary.records) {
      const double d = getter(r) - agg.mean;
      agg.variance += d * d;
    }
    agg.variance /= static_cast<double>(summary.records.size());
    return agg;
  };
  summary.reward = aggregate([](const EvalRecord& r) { return r.mean_reward; });
  summary.qoe = aggregate([](const EvalRecord& r) { return r.mean_qoe; });
  summary.hfqoe = aggregate([](const EvalRecord& r) { return r.final_hfqoe; });
  summary.success = aggregate([](const EvalRecord& r) { return r.success_rate; });
  return summary;
}

}  // namespace vrqoe
