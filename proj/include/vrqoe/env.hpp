#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <vector>

#include "vrqoe/channel.hpp"
#include "vrqoe/rng.hpp"
#include "vrqoe/scene.hpp"

namespace vrqoe {

// Minimum keyframes per second for any transmitted character; also the
// reference count inside the keyframe log-utility.
inline constexpr double kMinKeyframes = 2.0;

struct SystemParams {
  int users = 5;
  double fps = 30.0;                         // xi, frames per second
  double frame_bytes = 10000.0;              // delta, per character per frame
  double slot_seconds = 1.0;                 // duration of one time slot
  double compression = 3.0;                  // omega, motion-data compression ratio
  double extract_cycles_per_bit = 30.0;      // server-side keyframe extraction
  double reconstruct_cycles_per_bit = 50.0;  // client-side in-between reconstruction
  double render_cycles_per_bit = 240.0;      // client-side rendering
  double latency_budget_s = 0.15;            // T_max
  double total_bandwidth_hz = 10e6;          // b_max
  double total_server_hz = 10e9;             // f_max
  double client_hz_min = 1.5e9;              // per-user device CPU, lower bound
  double client_hz_max = 2.5e9;
  double qoe_threshold = 0.2;
  double hfqoe_threshold = 0.6;
  double qoe_penalty = 0.5;       // omega_1
  double fairness_penalty = 0.5;  // omega_2
  double scene_m = 10.0;          // virtual-scene edge length

  double frame_bits() const { return frame_bytes * 8.0; }
  int max_keyframes() const { return static_cast<int>(fps); }
  // Per-slot QoE never exceeds 3 * ln(xi * dt / 2): all characters in central
  // vision at the full frame rate.
  double qoe_upper_bound() const;
  void validate() const;  // throws std::invalid_argument naming the field
};

// Raw actor output: 6K sigmoid components in (0,1), laid out as
// [b_hat(K) | f_hat(K) | F_hat(K x 4, level-minor)].
struct RawAction {
  std::vector<double> v;

  static int dim(int users) { return 6 * users; }
  double bandwidth(int users, int k) const { return v[static_cast<std::size_t>(k)]; }
  double server(int users, int k) const { return v[static_cast<std::size_t>(users + k)]; }
  double keyframe(int users, int k, int level) const {
    return v[static_cast<std::size_t>(2 * users + 4 * k + level)];
  }
};

// Feasible per-slot decision. Bandwidth and server cycles sum to the totals;
// keyframe counts are integers in [2, fps]. `transmit` marks which attention
// levels are actually sent: the adaptive scheme and the fixed-ratio baselines
// skip blind-spot characters, the no-attention baseline sends everything.
struct Action {
  std::vector<double> bandwidth_hz;
  std::vector<double> server_hz;
  std::vector<std::array<int, kAttentionLevels>> keyframes;
  std::vector<std::array<bool, kAttentionLevels>> transmit;
  bool extraction = true;  // false for schemes that send raw frames
};

Action normalize_action(const RawAction& raw, const SystemParams& params);

struct DataVolumes {
  double upload_bits = 0.0;    // W_u
  double download_bits = 0.0;  // W_d
};

std::vector<DataVolumes> data_volumes(const AttentionSnapshot& snapshot, const Action& action,
                                      const SystemParams& params);

struct DelayBreakdown {
  double upload_s = 0.0;       // T_u
  double extract_s = 0.0;      // T_e
  double download_s = 0.0;     // T_d
  double reconstruct_s = 0.0;  // T_r, reconstruction plus rendering

  double total() const { return upload_s + extract_s + download_s + reconstruct_s; }
};

// Communication time is (W_u + W_d) / (omega R) split between upload and
// download proportionally to the two volumes. A zero rate or frequency yields
// infinite components, recorded downstream as a delivery failure.
std::vector<DelayBreakdown> latency_breakdown(const std::vector<DataVolumes>& volumes,
                                              const Action& action,
                                              const std::vector<double>& rate_bps,
                                              const AttentionSnapshot& snapshot,
                                              const std::vector<double>& client_hz,
                                              const SystemParams& params);

// QoE_k = (1 - T/T_max) * sum_a (a N_a / N) ln(F_a dt / 2); zero once the
// latency budget is exhausted. Untransmitted levels contribute nothing.
std::vector<double> qoe(const AttentionSnapshot& snapshot, const Action& action,
                        const std::vector<DelayBreakdown>& delays, const SystemParams& params);

// Running QoE statistics across an episode, feeding the fairness metric.
class QoeStats {
 public:
  explicit QoeStats(int users = 0);
  void reset(int users);
  void add_slot(const std::vector<double>& slot_qoe);

  int slots() const { return slots_; }
  double average(int user) const;  // 0 before the first slot
  double high() const { return slots_ ? high_ : 0.0; }
  double low() const { return slots_ ? low_ : 0.0; }
  double sigma_star() const;  // population std-dev of the per-user averages
  // hfQoE = 1 - 2 sigma* / (H - L); defined as 1 when H == L.
  double hfqoe() const;

 private:
  std::vector<double> sum_;
  int slots_ = 0;
  double high_ = 0.0;
  double low_ = 0.0;
};

double reward_value(const std::vector<double>& slot_qoe, double hfqoe_value,
                    const SystemParams& params, std::vector<bool>* qoe_flags = nullptr,
                    bool* hfqoe_flag = nullptr);

struct QoEReport {
  std::vector<double> qoe;          // this slot, per user
  std::vector<double> average_qoe;  // running means through this slot
  std::vector<DataVolumes> volumes;
  std::vector<DelayBreakdown> delays;
  std::vector<double> rate_bps;
  std::vector<bool> delivered;  // T_k <= T_max
  double high = 0.0;
  double low = 0.0;
  double sigma_star = 0.0;
  double hfqoe = 1.0;
  std::vector<bool> below_qoe_threshold;
  bool below_hfqoe_threshold = false;
  double reward = 0.0;
};

// State layout: the action-irrelevant block S1 holds the flattened attention
// counts (K x 4, scaled by 1/(K-1)); the action-relevant block S2 holds per
// user [T_u, T_e, T_d, T_r] / T_max (capped), QoE and average QoE scaled by
// the QoE upper bound, then the running extrema H and L on the same scale.
struct EnvState {
  Eigen::VectorXd features;
  int users = 0;
};

int state_dim(int users);
int action_dim(int users);
std::vector<int> s1_indices(int users);
std::vector<int> s2_indices(int users);

class VrEnv {
 public:
  VrEnv(SystemParams sys, ChannelParams chan);

  // Starts an episode on `trace`. Draws the per-user device CPU frequencies
  // and clears the running statistics; the returned state has a zero S2 block.
  EnvState reset(const SceneTrace& trace, std::uint64_t seed);

  struct StepResult {
    EnvState state;
    QoEReport report;
    double reward = 0.0;
    bool done = false;
  };

  StepResult step(const RawAction& raw);
  StepResult step(const Action& action);

  const AttentionSnapshot& snapshot() const { return snapshot_; }  // upcoming slot
  int slot() const { return slot_; }
  bool done() const { return done_; }
  const SystemParams& system() const { return sys_; }
  const ChannelParams& channel() const { return chan_; }
  const std::vector<double>& client_hz() const { return client_hz_; }

 private:
  EnvState make_state(const AttentionSnapshot& snap, const QoEReport* report) const;

  SystemParams sys_;
  ChannelParams chan_;
  SceneTrace trace_;
  AttentionSnapshot snapshot_;
  QoeStats stats_;
  std::vector<double> client_hz_;
  Rng rng_{0};
  int slot_ = 0;
  bool done_ = true;
};

}  // namespace vrqoe
