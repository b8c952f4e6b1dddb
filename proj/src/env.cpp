#include "vrqoe/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace vrqoe {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
// Delay features are capped at this many latency budgets so that a starved
// link cannot blow up the state scale.
constexpr double kDelayFeatureCap = 10.0;

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw std::invalid_argument(field + " " + what);
}
}  // namespace

double SystemParams::qoe_upper_bound() const {
  return 3.0 * std::log(fps * slot_seconds / kMinKeyframes);
}

void SystemParams::validate() const {
  require(users >= 2, "environment.users", "must be at least 2");
  require(fps >= kMinKeyframes, "environment.fps", "must be at least 2");
  require(frame_bytes > 0, "environment.frame_bytes", "must be positive");
  require(slot_seconds > 0, "environment.slot_seconds", "must be positive");
  require(compression > 0, "environment.compression", "must be positive");
  require(extract_cycles_per_bit > 0, "environment.extract_cycles_per_bit", "must be positive");
  require(reconstruct_cycles_per_bit > 0, "environment.reconstruct_cycles_per_bit",
          "must be positive");
  require(render_cycles_per_bit > 0, "environment.render_cycles_per_bit", "must be positive");
  require(latency_budget_s > 0, "environment.t_max", "must be positive");
  require(latency_budget_s < slot_seconds, "environment.t_max",
          "must be smaller than environment.slot_seconds");
  require(total_bandwidth_hz > 0, "environment.b_max", "must be positive");
  require(total_server_hz > 0, "environment.f_max", "must be positive");
  require(client_hz_min > 0, "environment.client_hz_min", "must be positive");
  require(client_hz_max >= client_hz_min, "environment.client_hz_max",
          "must be at least environment.client_hz_min");
  require(qoe_penalty >= 0, "environment.qoe_penalty", "must be non-negative");
  require(fairness_penalty >= 0, "environment.fairness_penalty", "must be non-negative");
  require(scene_m > 0, "environment.scene_m", "must be positive");
}

Action normalize_action(const RawAction& raw, const SystemParams& params) {
  const int users = params.users;
  if (static_cast<int>(raw.v.size()) != RawAction::dim(users))
    throw std::invalid_argument("normalize_action: raw action has dimension " +
                                std::to_string(raw.v.size()) + ", expected " +
                                std::to_string(RawAction::dim(users)));
  for (double x : raw.v)
    if (!(x > 0.0) || !(x < 1.0))
      throw std::invalid_argument("normalize_action: raw components must lie strictly in (0,1)");

  double b_sum = 0.0;
  double f_sum = 0.0;
  for (int k = 0; k < users; ++k) {
    b_sum += raw.bandwidth(users, k);
    f_sum += raw.server(users, k);
  }
  // Components are strictly positive, so the sums cannot vanish.

  Action action;
  action.bandwidth_hz.resize(static_cast<std::size_t>(users));
  action.server_hz.resize(static_cast<std::size_t>(users));
  action.keyframes.resize(static_cast<std::size_t>(users));
  action.transmit.resize(static_cast<std::size_t>(users));
  const int max_f = params.max_keyframes();
  for (int k = 0; k < users; ++k) {
    const std::size_t i = static_cast<std::size_t>(k);
    action.bandwidth_hz[i] = params.total_bandwidth_hz * raw.bandwidth(users, k) / b_sum;
    action.server_hz[i] = params.total_server_hz * raw.server(users, k) / f_sum;
    for (int a = 0; a < kAttentionLevels; ++a) {
      const int f = static_cast<int>(std::ceil(raw.keyframe(users, k, a) * params.fps));
      action.keyframes[i][static_cast<std::size_t>(a)] =
          std::clamp(f, static_cast<int>(kMinKeyframes), max_f);
      // The adaptive scheme sends only characters inside the field of view.
      action.transmit[i][static_cast<std::size_t>(a)] = a > 0;
    }
  }
  action.extraction = true;
  return action;
}

std::vector<DataVolumes> data_volumes(const AttentionSnapshot& snapshot, const Action& action,
                                      const SystemParams& params) {
  const int users = snapshot.users();
  const double bits = params.frame_bits() * params.slot_seconds;
  std::vector<DataVolumes> volumes(static_cast<std::size_t>(users));
  for (int k = 0; k < users; ++k) {
    const std::size_t i = static_cast<std::size_t>(k);
    volumes[i].upload_bits = params.fps * bits;
    double down = 0.0;
    for (int a = 0; a < kAttentionLevels; ++a) {
      const std::size_t ai = static_cast<std::size_t>(a);
      if (!action.transmit[i][ai]) continue;
      down += snapshot.counts[i][ai] * static_cast<double>(action.keyframes[i][ai]) * bits;
    }
    volumes[i].download_bits = down;
  }
  return volumes;
}

std::vector<DelayBreakdown> latency_breakdown(const std::vector<DataVolumes>& volumes,
                                              const Action& action,
                                              const std::vector<double>& rate_bps,
                                              const AttentionSnapshot& snapshot,
                                              const std::vector<double>& client_hz,
                                              const SystemParams& params) {
  const int users = snapshot.users();
  const double bits = params.frame_bits() * params.slot_seconds;
  std::vector<DelayBreakdown> delays(static_cast<std::size_t>(users));
  for (int k = 0; k < users; ++k) {
    const std::size_t i = static_cast<std::size_t>(k);
    DelayBreakdown& d = delays[i];

    const double total_bits = volumes[i].upload_bits + volumes[i].download_bits;
    if (rate_bps[i] > 0.0) {
      const double comm = total_bits / (params.compression * rate_bps[i]);
      if (total_bits > 0.0) {
        d.upload_s = comm * volumes[i].upload_bits / total_bits;
        d.download_s = comm * volumes[i].download_bits / total_bits;
      }
    } else {
      d.upload_s = kInf;
      d.download_s = kInf;
    }

    double tx_keyframe_bits = 0.0;  // transmitted keyframe payload
    double recon_bits = 0.0;        // in-between frames rebuilt on the client
    for (int a = 0; a < kAttentionLevels; ++a) {
      const std::size_t ai = static_cast<std::size_t>(a);
      if (!action.transmit[i][ai]) continue;
      const double n = snapshot.counts[i][ai];
      tx_keyframe_bits += n * action.keyframes[i][ai] * bits;
      recon_bits += n * (params.fps - action.keyframes[i][ai]) * bits;
    }

    if (action.extraction) {
      const double f_e = action.server_hz[i];
      d.extract_s = f_e > 0.0 ? params.extract_cycles_per_bit * tx_keyframe_bits / f_e : kInf;
    }

    const double render_bits = params.fps * bits;
    const double f_r = client_hz[i];
    d.reconstruct_s = f_r > 0.0
                          ? (params.reconstruct_cycles_per_bit * recon_bits +
                             params.render_cycles_per_bit * render_bits) /
                                f_r
                          : kInf;
  }
  return delays;
}

std::vector<double> qoe(const AttentionSnapshot& snapshot, const Action& action,
                        const std::vector<DelayBreakdown>& delays, const SystemParams& params) {
  const int users = snapshot.users();
  std::vector<double> result(static_cast<std::size_t>(users), 0.0);
  for (int k = 0; k < users; ++k) {
    const std::size_t i = static_cast<std::size_t>(k);
    const double total = delays[i].total();
    if (!(total < params.latency_budget_s)) continue;  // delivery failure => 0
    const double scene_chars = snapshot.observed(k);
    if (scene_chars <= 0.0) continue;
    double utility = 0.0;
    for (int a = 1; a < kAttentionLevels; ++a) {
      const std::size_t ai = static_cast<std::size_t>(a);
      if (!action.transmit[i][ai]) continue;
      const double weight = a * snapshot.counts[i][ai] / scene_chars;
      utility +=
          weight * std::log(action.keyframes[i][ai] * params.slot_seconds / kMinKeyframes);
    }
    result[i] = (1.0 - total / params.latency_budget_s) * utility;
  }
  return result;
}

QoeStats::QoeStats(int users) { reset(users); }

void QoeStats::reset(int users) {
  sum_.assign(static_cast<std::size_t>(users), 0.0);
  slots_ = 0;
  high_ = 0.0;
  low_ = 0.0;
}

void QoeStats::add_slot(const std::vector<double>& slot_qoe) {
  if (slot_qoe.size() != sum_.size())
    throw std::invalid_argument("QoeStats::add_slot: user count mismatch");
  for (std::size_t i = 0; i < sum_.size(); ++i) sum_[i] += slot_qoe[i];
  const auto [lo, hi] = std::minmax_element(slot_qoe.begin(), slot_qoe.end());
  if (slots_ == 0) {
    high_ = *hi;
    low_ = *lo;
  } else {
    high_ = std::max(high_, *hi);
    low_ = std::min(low_, *lo);
  }
  ++slots_;
}

double QoeStats::average(int user) const {
  return slots_ ? sum_[static_cast<std::size_t>(user)] / slots_ : 0.0;
}

double QoeStats::sigma_star() const {
  if (sum_.empty() || slots_ == 0) return 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < sum_.size(); ++i) mean += average(static_cast<int>(i));
  mean /= static_cast<double>(sum_.size());
  double var = 0.0;
  for (std::size_t i = 0; i < sum_.size(); ++i) {
    const double d = average(static_cast<int>(i)) - mean;
    var += d * d;
  }
  return std::sqrt(var / static_cast<double>(sum_.size()));
}

double QoeStats::hfqoe() const {
  const double range = high() - low();
  if (range <= 0.0) return 1.0;  // identical experiences are perfectly fair
  return 1.0 - 2.0 * sigma_star() / range;
}

double reward_value(const std::vector<double>& slot_qoe, double hfqoe_value,
                    const SystemParams& params, std::vector<bool>* qoe_flags, bool* hfqoe_flag) {
  double reward = 0.0;
  if (qoe_flags) qoe_flags->assign(slot_qoe.size(), false);
  for (std::size_t i = 0; i < slot_qoe.size(); ++i) {
    reward += slot_qoe[i];
    if (slot_qoe[i] < params.qoe_threshold) {
      reward -= params.qoe_penalty;
      if (qoe_flags) (*qoe_flags)[i] = true;
    }
  }
  const bool unfair = hfqoe_value < params.hfqoe_threshold;
  if (unfair) reward -= params.fairness_penalty;
  if (hfqoe_flag) *hfqoe_flag = unfair;
  return reward;
}

int state_dim(int users) { return 4 * users + 6 * users + 2; }

int action_dim(int users) { return RawAction::dim(users); }

std::vector<int> s1_indices(int users) {
  std::vector<int> idx(static_cast<std::size_t>(4 * users));
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

std::vector<int> s2_indices(int users) {
  std::vector<int> idx(static_cast<std::size_t>(6 * users + 2));
  std::iota(idx.begin(), idx.end(), 4 * users);
  return idx;
}

VrEnv::VrEnv(SystemParams sys, ChannelParams chan) : sys_(std::move(sys)), chan_(std::move(chan)) {
  sys_.validate();
  if (chan_.user_distance_m.empty())
    chan_.user_distance_m = distances_from_positions(default_user_positions());
}

EnvState VrEnv::reset(const SceneTrace& trace, std::uint64_t seed) {
  if (trace.slot_count() == 0) throw std::invalid_argument("VrEnv::reset: empty trace");
  if (trace.users() != sys_.users)
    throw std::invalid_argument("VrEnv::reset: trace has " + std::to_string(trace.users()) +
                                " users but the environment is configured for " +
                                std::to_string(sys_.users));
  trace_ = trace;
  rng_ = Rng(seed);
  client_hz_.resize(static_cast<std::size_t>(sys_.users));
  for (double& f : client_hz_) f = rng_.uniform(sys_.client_hz_min, sys_.client_hz_max);
  stats_.reset(sys_.users);
  slot_ = 0;
  done_ = false;
  snapshot_ = attention_snapshot(trace_.slots.front());
  return make_state(snapshot_, nullptr);
}

VrEnv::StepResult VrEnv::step(const RawAction& raw) { return step(normalize_action(raw, sys_)); }

VrEnv::StepResult VrEnv::step(const Action& action) {
  if (done_) throw std::logic_error("VrEnv::step: episode is complete, call reset first");

  const int users = sys_.users;
  const ChannelRealization channel = sample_channel(chan_, users, rng_);
  std::vector<double> rates(static_cast<std::size_t>(users));
  for (int k = 0; k < users; ++k)
    rates[static_cast<std::size_t>(k)] =
        transmission_rate(action.bandwidth_hz[static_cast<std::size_t>(k)], chan_,
                          channel.gain_sq[static_cast<std::size_t>(k)]);

  QoEReport report;
  report.rate_bps = rates;
  report.volumes = data_volumes(snapshot_, action, sys_);
  report.delays = latency_breakdown(report.volumes, action, rates, snapshot_, client_hz_, sys_);
  report.qoe = qoe(snapshot_, action, report.delays, sys_);
  report.delivered.resize(static_cast<std::size_t>(users));
  for (int k = 0; k < users; ++k)
    report.delivered[static_cast<std::size_t>(k)] =
        report.delays[static_cast<std::size_t>(k)].total() <= sys_.latency_budget_s;

  stats_.add_slot(report.qoe);
  report.average_qoe.resize(static_cast<std::size_t>(users));
  for (int k = 0; k < users; ++k)
    report.average_qoe[static_cast<std::size_t>(k)] = stats_.average(k);
  report.high = stats_.high();
  report.low = stats_.low();
  report.sigma_star = stats_.sigma_star();
  report.hfqoe = stats_.hfqoe();
  report.reward = reward_value(report.qoe, report.hfqoe, sys_, &report.below_qoe_threshold,
                               &report.below_hfqoe_threshold);

  ++slot_;
  done_ = slot_ >= static_cast<int>(trace_.slot_count());
  const std::size_t next_slot =
      std::min(static_cast<std::size_t>(slot_), trace_.slot_count() - 1);
  snapshot_ = attention_snapshot(trace_.slots[next_slot]);

  StepResult result;
  result.state = make_state(snapshot_, &report);
  result.report = report;
  result.reward = report.reward;
  result.done = done_;
  return result;
}

EnvState VrEnv::make_state(const AttentionSnapshot& snap, const QoEReport* report) const {
  const int users = sys_.users;
  EnvState state;
  state.users = users;
  state.features = Eigen::VectorXd::Zero(state_dim(users));

  const double count_scale = 1.0 / (users - 1);
  int pos = 0;
  for (int k = 0; k < users; ++k)
    for (int a = 0; a < kAttentionLevels; ++a)
      state.features[pos++] =
          snap.counts[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)] * count_scale;

  if (report) {
    const double qoe_scale = 1.0 / sys_.qoe_upper_bound();
    const auto delay_feature = [&](double seconds) {
      return std::min(seconds / sys_.latency_budget_s, kDelayFeatureCap);
    };
    for (int k = 0; k < users; ++k) {
      const std::size_t i = static_cast<std::size_t>(k);
      state.features[pos++] = delay_feature(report->delays[i].upload_s);
      state.features[pos++] = delay_feature(report->delays[i].extract_s);
      state.features[pos++] = delay_feature(report->delays[i].download_s);
      state.features[pos++] = delay_feature(report->delays[i].reconstruct_s);
      state.features[pos++] = report->qoe[i] * qoe_scale;
      state.features[pos++] = report->average_qoe[i] * qoe_scale;
    }
    state.features[pos++] = report->high * qoe_scale;
    state.features[pos++] = report->low * qoe_scale;
  } else {
    pos += 6 * users + 2;
  }
  return state;
}

}  // namespace vrqoe
