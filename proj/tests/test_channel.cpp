#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vrqoe/channel.hpp"
#include "vrqoe/units.hpp"

using namespace vrqoe;

namespace {
ChannelParams reference_params() {
  ChannelParams p;  // defaults carry the reference constants
  p.user_distance_m = distances_from_positions(default_user_positions());
  return p;
}
}  // namespace

TEST_CASE("path loss matches the reference constants") {
  const ChannelParams p = reference_params();
  // Approaching the reference distance from above leaves only PL(d0).
  CHECK(path_loss_db(1.0 + 1e-12, p, 0.0) == doctest::Approx(49.12).epsilon(1e-9));
  // log10(10) = 1, one full decade.
  CHECK(path_loss_db(10.0, p, 0.0) == doctest::Approx(49.12 + 12.4).epsilon(1e-12));
  // First reference user position [150, 250]: d = sqrt(150^2 + 250^2).
  const double d1 = std::hypot(150.0, 250.0);
  CHECK(d1 == doctest::Approx(291.5475947).epsilon(1e-9));
  CHECK(path_loss_db(d1, p, 0.0) ==
        doctest::Approx(49.12 + 12.4 * std::log10(d1)).epsilon(1e-12));
  CHECK(path_loss_db(d1, p, 0.0) == doctest::Approx(79.6802).epsilon(1e-4));
  // Shadow sample adds on top in dB.
  CHECK(path_loss_db(10.0, p, 2.5) == doctest::Approx(49.12 + 12.4 + 2.5).epsilon(1e-12));
}

TEST_CASE("distances at or below the reference are rejected") {
  const ChannelParams p = reference_params();
  CHECK_THROWS_AS(path_loss_db(1.0, p, 0.0), std::domain_error);
  CHECK_THROWS_AS(path_loss_db(0.5, p, 0.0), std::domain_error);
}

TEST_CASE("path loss grows with distance") {
  const ChannelParams p = reference_params();
  double previous = path_loss_db(1.001, p, 0.0);
  for (double d = 2.0; d < 400.0; d *= 1.7) {
    const double pl = path_loss_db(d, p, 0.0);
    CHECK(pl > previous);
    previous = pl;
  }
}

TEST_CASE("dBm conversions match the evaluation table values") {
  CHECK(dbm_to_watt(20.0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(dbm_to_watt(-110.0) == doctest::Approx(1e-14).epsilon(1e-12));
  CHECK(db_to_linear(0.0) == 1.0);
  CHECK(linear_to_db(100.0) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("transmission rate reproduces the closed-form points") {
  ChannelParams p = reference_params();
  const double noise_w = dbm_to_watt(p.noise_power_dbm);
  const double power_w = dbm_to_watt(p.tx_power_dbm);
  // Choose |g|^2 so the SNR term is exactly 1 -> log2(2) = 1.
  const double g_unit = noise_w / power_w;
  CHECK(transmission_rate(1e6, p, g_unit) == doctest::Approx(1e6).epsilon(1e-12));
  // SNR term 3 -> log2(4) = 2.
  CHECK(transmission_rate(1e6, p, 3.0 * g_unit) == doctest::Approx(2e6).epsilon(1e-12));
  CHECK(transmission_rate(0.0, p, g_unit) == 0.0);
  CHECK_THROWS_AS(transmission_rate(-1.0, p, g_unit), std::domain_error);
}

TEST_CASE("rate is monotone in bandwidth and channel gain") {
  const ChannelParams p = reference_params();
  double previous = 0.0;
  for (double b = 1e5; b < 2e7; b *= 2) {
    const double r = transmission_rate(b, p, 1e-8);
    CHECK(r > previous);
    previous = r;
  }
  previous = 0.0;
  for (double g = 1e-10; g < 1e-6; g *= 3) {
    const double r = transmission_rate(1e6, p, g);
    CHECK(r >= previous);
    previous = r;
  }
}

TEST_CASE("disabling fading leaves the deterministic large-scale gain") {
  ChannelParams p = reference_params();
  p.shadow_sigma_db = 0.0;
  // With the fading coefficient pinned to one, |g|^2 = beta = 10^(-PL/10).
  const double pl = path_loss_db(p.distance(0), p, 0.0);
  Rng rng(3);
  const ChannelRealization real = sample_channel(p, 5, rng);
  CHECK(real.beta[0] == doctest::Approx(db_to_linear(-pl)).epsilon(1e-12));
  const double h_sq = real.h_re[0] * real.h_re[0] + real.h_im[0] * real.h_im[0];
  CHECK(real.gain_sq[0] == doctest::Approx(real.beta[0] * h_sq).epsilon(1e-12));
}

TEST_CASE("same seed gives the same realization") {
  const ChannelParams p = reference_params();
  Rng a(42), b(42);
  const ChannelRealization ra = sample_channel(p, 5, a);
  const ChannelRealization rb = sample_channel(p, 5, b);
  for (int k = 0; k < 5; ++k) {
    CHECK(ra.gain_sq[k] == rb.gain_sq[k]);
    CHECK(ra.beta[k] == rb.beta[k]);
  }
}

TEST_CASE("small-scale power is unit-mean exponential") {
  ChannelParams p = reference_params();
  p.shadow_sigma_db = 0.0;
  Rng rng(2024);
  const int draws = 100000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const ChannelRealization real = sample_channel(p, 1, rng);
    const double ratio = real.gain_sq[0] / real.beta[0];  // |h|^2
    sum += ratio;
    sum_sq += ratio * ratio;
  }
  const double mean = sum / draws;
  CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
  // Exponential(1) has variance 1; allow 3 standard errors around it.
  const double var = sum_sq / draws - mean * mean;
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(20.0 / draws) + 0.05);
}
