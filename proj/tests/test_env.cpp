#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vrqoe/env.hpp"
#include "vrqoe/rng.hpp"

using namespace vrqoe;

namespace {

SystemParams table_params() { return SystemParams{}; }

RawAction uniform_raw(int users, double value = 0.5) {
  RawAction raw;
  raw.v.assign(static_cast<std::size_t>(RawAction::dim(users)), value);
  return raw;
}

AttentionSnapshot snapshot_of(std::vector<std::array<int, 4>> counts) {
  AttentionSnapshot snap;
  snap.counts = std::move(counts);
  return snap;
}

Action transmit_all(Action action) {
  for (auto& row : action.transmit) row = {true, true, true, true};
  return action;
}

VrEnv table_env() {
  ChannelParams chan;
  chan.user_distance_m = distances_from_positions(default_user_positions());
  return VrEnv(table_params(), chan);
}

}  // namespace

TEST_CASE("normalization conserves the resource totals") {
  const SystemParams params = table_params();
  const Action action = normalize_action(uniform_raw(5), params);
  for (double b : action.bandwidth_hz)
    CHECK(b == doctest::Approx(params.total_bandwidth_hz / 5).epsilon(1e-12));
  for (double f : action.server_hz)
    CHECK(f == doctest::Approx(params.total_server_hz / 5).epsilon(1e-12));
}

TEST_CASE("bandwidth shares follow the raw ratios") {
  SystemParams params = table_params();
  params.users = 2;
  RawAction raw = uniform_raw(2);
  raw.v[0] = 0.9;
  raw.v[1] = 0.3;
  const Action action = normalize_action(raw, params);
  CHECK(action.bandwidth_hz[0] == doctest::Approx(0.75 * params.total_bandwidth_hz).epsilon(1e-12));
  CHECK(action.bandwidth_hz[1] == doctest::Approx(0.25 * params.total_bandwidth_hz).epsilon(1e-12));
}

TEST_CASE("keyframe discretization is ceil then clamp") {
  SystemParams params = table_params();
  RawAction raw = uniform_raw(5);
  const Action mid = normalize_action(raw, params);
  CHECK(mid.keyframes[0][0] == 15);  // ceil(0.5 * 30)

  for (int k = 0; k < 5; ++k)
    for (int a = 0; a < 4; ++a) raw.v[static_cast<std::size_t>(10 + 4 * k + a)] = 0.01;
  const Action low = normalize_action(raw, params);
  CHECK(low.keyframes[2][1] == 2);  // ceil(0.3) = 1, clamped up to the minimum

  for (int k = 0; k < 5; ++k)
    for (int a = 0; a < 4; ++a) raw.v[static_cast<std::size_t>(10 + 4 * k + a)] = 0.999;
  const Action high = normalize_action(raw, params);
  CHECK(high.keyframes[4][3] == 30);
}

TEST_CASE("raw components outside the open unit interval are rejected") {
  const SystemParams params = table_params();
  RawAction raw = uniform_raw(5);
  raw.v[3] = 0.0;
  CHECK_THROWS_AS(normalize_action(raw, params), std::invalid_argument);
  raw.v[3] = 1.0;
  CHECK_THROWS_AS(normalize_action(raw, params), std::invalid_argument);
  raw.v.pop_back();
  CHECK_THROWS_AS(normalize_action(raw, params), std::invalid_argument);
}

TEST_CASE("feasibility holds across random raw actions") {
  const SystemParams params = table_params();
  Rng rng(99);
  for (int trial = 0; trial < 10000; ++trial) {
    RawAction raw;
    raw.v.resize(static_cast<std::size_t>(RawAction::dim(5)));
    for (double& x : raw.v) x = rng.uniform(1e-6, 1.0 - 1e-6);
    const Action action = normalize_action(raw, params);
    double b_sum = 0.0, f_sum = 0.0;
    for (double b : action.bandwidth_hz) b_sum += b;
    for (double f : action.server_hz) f_sum += f;
    CHECK(std::abs(b_sum - params.total_bandwidth_hz) <= 1e-9 * params.total_bandwidth_hz);
    CHECK(std::abs(f_sum - params.total_server_hz) <= 1e-9 * params.total_server_hz);
    for (const auto& row : action.keyframes)
      for (int f : row) {
        CHECK(f >= 2);
        CHECK(f <= 30);
      }
  }
}

TEST_CASE("upload volume matches the table arithmetic") {
  const SystemParams params = table_params();
  const auto snap = snapshot_of({{1, 1, 1, 1}, {4, 0, 0, 0}, {0, 4, 0, 0}, {0, 0, 4, 0},
                                 {0, 0, 0, 4}});
  const Action action = transmit_all(normalize_action(uniform_raw(5), params));
  const auto volumes = data_volumes(snap, action, params);
  // 30 fps * 10 kB * 1 s = 300 kB = 2.4e6 bits.
  for (const DataVolumes& v : volumes)
    CHECK(v.upload_bits == doctest::Approx(2.4e6).epsilon(1e-12));
}

TEST_CASE("empty field of view downloads nothing") {
  const SystemParams params = table_params();
  const auto snap = snapshot_of({{0, 0, 0, 0}, {0, 0, 0, 0}});
  SystemParams two = params;
  two.users = 2;
  const Action action = transmit_all(normalize_action(uniform_raw(2), two));
  const auto volumes = data_volumes(snap, action, two);
  CHECK(volumes[0].download_bits == 0.0);
  CHECK(volumes[1].download_bits == 0.0);
}

TEST_CASE("one central character at 15 keyframes downloads 1.2e6 bits") {
  SystemParams params = table_params();
  params.users = 2;
  const auto snap = snapshot_of({{0, 0, 0, 1}, {0, 0, 0, 1}});
  Action action = transmit_all(normalize_action(uniform_raw(2), params));
  for (auto& row : action.keyframes) row = {15, 15, 15, 15};
  const auto volumes = data_volumes(snap, action, params);
  CHECK(volumes[0].download_bits == doctest::Approx(1.2e6).epsilon(1e-12));
}

TEST_CASE("communication latency splits proportionally to the volumes") {
  SystemParams params = table_params();
  params.users = 1;
  // Hand case: W_u + W_d = 3e6 bits, omega = 3, R = 1e7 -> 0.1 s total.
  std::vector<DataVolumes> volumes{{2.4e6, 0.6e6}};
  const auto snap = snapshot_of({{0, 0, 0, 0}});
  Action action;
  action.bandwidth_hz = {1e6};
  action.server_hz = {3e9};
  action.keyframes = {{30, 30, 30, 30}};
  action.transmit = {{true, true, true, true}};
  const auto delays =
      latency_breakdown(volumes, action, {1e7}, snap, {2e9}, params);
  CHECK(delays[0].upload_s + delays[0].download_s == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(delays[0].upload_s == doctest::Approx(0.1 * 2.4 / 3.0).epsilon(1e-12));
  CHECK(delays[0].download_s == doctest::Approx(0.1 * 0.6 / 3.0).epsilon(1e-12));
}

TEST_CASE("extraction latency is cycles over frequency") {
  SystemParams params = table_params();
  params.users = 1;
  // One character, level 3, F such that the transmitted volume is 1e6 bits:
  // N * F * delta * dt = 1e6 -> F = 1e6 / 8e4 = 12.5; use direct volume calc.
  const auto snap = snapshot_of({{0, 0, 0, 1}});
  Action action;
  action.bandwidth_hz = {1e6};
  action.server_hz = {3e9};
  action.keyframes = {{2, 2, 2, 25}};
  action.transmit = {{false, false, false, true}};
  const auto volumes = data_volumes(snap, action, params);
  CHECK(volumes[0].download_bits == doctest::Approx(25 * 8e4).epsilon(1e-12));
  const auto delays = latency_breakdown(volumes, action, {1e9}, snap, {2e9}, params);
  // c_e = 30 cycles/bit on 2e6 bits at 3 GHz -> 2e7 * 3 / 3e9 s.
  CHECK(delays[0].extract_s ==
        doctest::Approx(30.0 * 25 * 8e4 / 3e9).epsilon(1e-12));

  // The reference point from the latency model: 1e6 bits at c_e = 30 and
  // f_e = 3 GHz cost exactly 10 ms.
  CHECK(30.0 * 1e6 / 3e9 == doctest::Approx(0.010).epsilon(1e-12));
}

TEST_CASE("full-rate keyframes make the reconstruction term vanish") {
  SystemParams params = table_params();
  params.users = 1;
  const auto snap = snapshot_of({{1, 1, 1, 1}});
  Action action;
  action.bandwidth_hz = {1e6};
  action.server_hz = {2e9};
  action.keyframes = {{30, 30, 30, 30}};
  action.transmit = {{true, true, true, true}};
  const auto volumes = data_volumes(snap, action, params);
  const auto delays = latency_breakdown(volumes, action, {1e8}, snap, {2e9}, params);
  // Only the rendering part remains: c_r2 * xi * delta * dt / f_r.
  const double render = params.render_cycles_per_bit * 30.0 * 8e4 / 2e9;
  CHECK(delays[0].reconstruct_s == doctest::Approx(render).epsilon(1e-12));
}

TEST_CASE("qoe reproduces the closed-form examples") {
  SystemParams params = table_params();
  params.users = 5;
  const auto snap = snapshot_of({{0, 0, 0, 4}, {0, 0, 0, 4}, {0, 0, 0, 4}, {0, 0, 0, 4},
                                 {0, 0, 0, 4}});
  Action action = transmit_all(normalize_action(uniform_raw(5), params));
  for (auto& row : action.keyframes) row = {30, 30, 30, 30};

  // Minimum keyframes: ln(2 * 1 / 2) = 0 regardless of latency.
  Action min_action = action;
  for (auto& row : min_action.keyframes) row = {2, 2, 2, 2};
  std::vector<DelayBreakdown> delays(5);
  for (auto& d : delays) d.upload_s = 0.075;
  auto q = qoe(snap, min_action, delays, params);
  for (double v : q) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));

  // Latency at the budget zeroes the experience.
  for (auto& d : delays) d.upload_s = params.latency_budget_s;
  q = qoe(snap, action, delays, params);
  for (double v : q) CHECK(v == 0.0);

  // 75 ms of 150 ms, four central characters at the full rate:
  // 0.5 * 3 * ln(15) = 4.0620...
  for (auto& d : delays) d.upload_s = 0.075;
  q = qoe(snap, action, delays, params);
  for (double v : q)
    CHECK(v == doctest::Approx(0.5 * 3.0 * std::log(15.0)).epsilon(1e-12));
  CHECK(q[0] == doctest::Approx(4.06207).epsilon(1e-5));
}

TEST_CASE("qoe is monotone in keyframes and latency") {
  SystemParams params = table_params();
  params.users = 2;
  const auto snap = snapshot_of({{0, 1, 1, 2}, {0, 0, 0, 1}});
  std::vector<DelayBreakdown> delays(2);
  delays[0].download_s = 0.05;
  delays[1].download_s = 0.05;

  Action action = transmit_all(normalize_action(uniform_raw(2), params));
  double previous = -1.0;
  for (int f = 2; f <= 30; ++f) {
    for (auto& row : action.keyframes) row = {2, f, f, f};
    const double v = qoe(snap, action, delays, params)[0];
    CHECK(v >= previous);
    previous = v;
  }

  previous = 1e9;
  for (double t = 0.0; t < 0.2; t += 0.005) {
    delays[0].download_s = t;
    const double v = qoe(snap, action, delays, params)[0];
    CHECK(v <= previous);
    previous = v;
  }
}

TEST_CASE("qoe stays within its analytic bounds") {
  SystemParams params = table_params();
  params.users = 5;
  Rng rng(5);
  const double upper = params.qoe_upper_bound();
  CHECK(upper == doctest::Approx(3.0 * std::log(15.0)).epsilon(1e-12));
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<std::array<int, 4>> counts(5, {0, 0, 0, 0});
    for (auto& row : counts) {
      int left = 4;
      for (int a = 0; a < 3; ++a) {
        const int take = rng.uniform_int(0, left);
        row[a] = take;
        left -= take;
      }
      row[3] = left;
    }
    RawAction raw;
    raw.v.resize(static_cast<std::size_t>(RawAction::dim(5)));
    for (double& x : raw.v) x = rng.uniform(1e-6, 1.0 - 1e-6);
    const Action action = transmit_all(normalize_action(raw, params));
    std::vector<DelayBreakdown> delays(5);
    for (auto& d : delays) d.download_s = rng.uniform(0.0, 0.3);
    for (double v : qoe(snapshot_of(counts), action, delays, params)) {
      CHECK(v >= 0.0);
      CHECK(v <= upper + 1e-12);
    }
  }
}

TEST_CASE("fairness follows the closed forms") {
  QoeStats stats(2);
  SUBCASE("identical users are perfectly fair") {
    for (int t = 0; t < 5; ++t) stats.add_slot({1.5, 1.5});
    CHECK(stats.sigma_star() == 0.0);
    CHECK(stats.hfqoe() == 1.0);
  }
  SUBCASE("constant 1 vs 2 hits zero fairness") {
    for (int t = 0; t < 4; ++t) stats.add_slot({1.0, 2.0});
    CHECK(stats.sigma_star() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(stats.high() == 2.0);
    CHECK(stats.low() == 1.0);
    CHECK(stats.hfqoe() == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("degenerate range falls back to 1") {
    stats.add_slot({0.7, 0.7});
    CHECK(stats.hfqoe() == 1.0);
  }
  SUBCASE("hfqoe never exceeds one") {
    Rng rng(77);
    QoeStats s(3);
    for (int t = 0; t < 50; ++t) {
      s.add_slot({rng.uniform(0, 4), rng.uniform(0, 4), rng.uniform(0, 4)});
      CHECK(s.hfqoe() <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("reward applies the two penalty terms") {
  SystemParams params = table_params();
  params.users = 5;
  std::vector<double> all_good(5, 1.0);
  CHECK(reward_value(all_good, 1.0, params) == doctest::Approx(5.0).epsilon(1e-12));

  std::vector<double> one_bad{1.0, 1.0, 1.0, 1.0, 0.1};
  const double sum = 4.1;
  CHECK(reward_value(one_bad, 1.0, params) == doctest::Approx(sum - 0.5).epsilon(1e-12));

  std::vector<double> all_bad(5, 0.05);
  std::vector<bool> flags;
  bool hf_flag = false;
  const double r = reward_value(all_bad, 0.1, params, &flags, &hf_flag);
  CHECK(r == doctest::Approx(0.25 - 2.5 - 0.5).epsilon(1e-12));
  CHECK(hf_flag);
  for (bool f : flags) CHECK(f);
}

TEST_CASE("reset clears the action-relevant block") {
  VrEnv env = table_env();
  const SceneTrace trace = synth_trace(5, 10, SceneBounds{}, 21);
  const EnvState state = env.reset(trace, 5);
  REQUIRE(state.features.size() == 52);
  for (int i = 20; i < 52; ++i) CHECK(state.features[i] == 0.0);
  // S1 carries the scaled attention counts of slot zero.
  const AttentionSnapshot snap = attention_snapshot(trace.slots[0]);
  for (int k = 0; k < 5; ++k)
    for (int a = 0; a < 4; ++a)
      CHECK(state.features[4 * k + a] == doctest::Approx(snap.counts[k][a] / 4.0));
}

TEST_CASE("reset is deterministic in trace and seed") {
  VrEnv env1 = table_env();
  VrEnv env2 = table_env();
  const SceneTrace trace = synth_trace(5, 5, SceneBounds{}, 3);
  const EnvState a = env1.reset(trace, 11);
  const EnvState b = env2.reset(trace, 11);
  CHECK((a.features.array() == b.features.array()).all());
  for (int k = 0; k < 5; ++k) CHECK(env1.client_hz()[k] == env2.client_hz()[k]);
  for (double f : env1.client_hz()) {
    CHECK(f >= 1.5e9);
    CHECK(f <= 2.5e9);
  }
}

TEST_CASE("state dimension follows 4K + 6K + 2") {
  CHECK(state_dim(5) == 52);
  CHECK(state_dim(2) == 22);
  CHECK(action_dim(5) == 30);
  CHECK(s1_indices(5).size() == 20);
  CHECK(s2_indices(5).size() == 32);
  CHECK(s2_indices(5).front() == 20);
  CHECK(s2_indices(5).back() == 51);
}

TEST_CASE("episodes finish after exactly the trace length") {
  VrEnv env = table_env();
  const SceneTrace trace = synth_trace(5, 100, SceneBounds{}, 1);
  env.reset(trace, 9);
  int steps = 0;
  while (!env.done()) {
    const auto result = env.step(uniform_raw(5));
    ++steps;
    CHECK(result.done == (steps == 100));
  }
  CHECK(steps == 100);
  CHECK_THROWS_AS(env.step(uniform_raw(5)), std::logic_error);
}

TEST_CASE("identical seeds and actions give identical trajectories") {
  VrEnv env1 = table_env();
  VrEnv env2 = table_env();
  const SceneTrace trace = synth_trace(5, 20, SceneBounds{}, 17);
  env1.reset(trace, 23);
  env2.reset(trace, 23);
  Rng rng(55);
  for (int t = 0; t < 20; ++t) {
    RawAction raw;
    raw.v.resize(30);
    for (double& x : raw.v) x = rng.uniform(0.1, 0.9);
    const auto r1 = env1.step(raw);
    const auto r2 = env2.step(raw);
    CHECK(r1.reward == r2.reward);
    CHECK((r1.state.features.array() == r2.state.features.array()).all());
    CHECK(r1.report.hfqoe == r2.report.hfqoe);
  }
}

TEST_CASE("blowing the latency budget zeroes qoe and sets the flag") {
  SystemParams params = table_params();  // table units: rendering alone > T_max
  ChannelParams chan;
  chan.user_distance_m = distances_from_positions(default_user_positions());
  VrEnv env(params, chan);
  const SceneTrace trace = synth_trace(5, 3, SceneBounds{}, 2);
  env.reset(trace, 1);
  const auto result = env.step(uniform_raw(5));
  for (int k = 0; k < 5; ++k) {
    CHECK(result.report.delays[k].total() > params.latency_budget_s);
    CHECK(result.report.qoe[k] == 0.0);
    CHECK(result.report.below_qoe_threshold[k]);
    CHECK_FALSE(result.report.delivered[k]);
  }
  CHECK(result.report.reward == doctest::Approx(-2.5).epsilon(1e-12));
}

TEST_CASE("validation names the offending field") {
  SystemParams params = table_params();
  params.latency_budget_s = -0.1;
  CHECK_THROWS_WITH_AS(params.validate(), doctest::Contains("environment.t_max"),
                       std::invalid_argument);
  params = table_params();
  params.latency_budget_s = 2.0;  // above the slot duration
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
}
