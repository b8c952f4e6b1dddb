#pragma once

#include <array>
#include <vector>

#include "vrqoe/rng.hpp"

namespace vrqoe {

// Sub-6 GHz link model: log-distance path loss with lognormal shadowing,
// Rayleigh small-scale fading, Shannon rate.
struct ChannelParams {
  double reference_m = 1.0;            // d0
  double pl_reference_db = 49.12;      // free-space loss at d0
  double pl_per_decade_db = 12.4;      // 10 * path-loss exponent
  double shadow_sigma_db = 0.9;
  double tx_power_dbm = 20.0;
  double noise_power_dbm = -110.0;
  std::vector<double> user_distance_m;  // one entry per user

  double distance(int user) const;  // cycles when there are more users than entries
};

// Default access-point/user geometry: server at the origin, users at the five
// reference positions (metres). Distances cycle for user counts above five.
const std::vector<std::array<double, 2>>& default_user_positions();
std::vector<double> distances_from_positions(const std::vector<std::array<double, 2>>& positions);

struct ChannelRealization {
  std::vector<double> beta;     // linear large-scale gain
  std::vector<double> h_re;     // small-scale coefficient, real part
  std::vector<double> h_im;     // imaginary part
  std::vector<double> gain_sq;  // |g|^2 = beta * |h|^2
};

// PL(d) = PL(d0) + 10 n log10(d / d0) + shadow. Requires d > d0.
double path_loss_db(double distance_m, const ChannelParams& params, double shadow_db);

// Per user: shadow ~ N(0, sigma^2) dB, h = x + iy with x, y ~ N(0, 1/2) so
// E|h|^2 = 1, beta = 10^(-PL/10). Draw order per user: shadow, x, y.
ChannelRealization sample_channel(const ChannelParams& params, int users, Rng& rng);

// Shannon rate in bit/s: b * log2(1 + P |g|^2 / noise), powers in watts.
double transmission_rate(double bandwidth_hz, const ChannelParams& params, double gain_sq);

}  // namespace vrqoe
