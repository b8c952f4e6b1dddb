#include "vrqoe/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "vrqoe/units.hpp"

namespace vrqoe {

double ChannelParams::distance(int user) const {
  if (user_distance_m.empty())
    throw std::invalid_argument("ChannelParams: no user distances configured");
  return user_distance_m[static_cast<std::size_t>(user) % user_distance_m.size()];
}

const std::vector<std::array<double, 2>>& default_user_positions() {
  static const std::vector<std::array<double, 2>> positions = {
      {150.0, 250.0}, {-120.0, 300.0}, {0.0, -300.0}, {-280.0, -50.0}, {100.0, -320.0}};
  return positions;
}

std::vector<double> distances_from_positions(
    const std::vector<std::array<double, 2>>& positions) {
  std::vector<double> d;
  d.reserve(positions.size());
  for (const auto& p : positions) d.push_back(std::hypot(p[0], p[1]));
  return d;
}

double path_loss_db(double distance_m, const ChannelParams& params, double shadow_db) {
  if (!(distance_m > params.reference_m))
    throw std::domain_error("path_loss_db: distance must exceed the reference distance");
  return params.pl_reference_db +
         params.pl_per_decade_db * std::log10(distance_m / params.reference_m) + shadow_db;
}

ChannelRealization sample_channel(const ChannelParams& params, int users, Rng& rng) {
  ChannelRealization real;
  real.beta.resize(static_cast<std::size_t>(users));
  real.h_re.resize(static_cast<std::size_t>(users));
  real.h_im.resize(static_cast<std::size_t>(users));
  real.gain_sq.resize(static_cast<std::size_t>(users));
  const double h_std = std::sqrt(0.5);
  for (int k = 0; k < users; ++k) {
    const double shadow = rng.gaussian(0.0, params.shadow_sigma_db);
    const double x = rng.gaussian(0.0, h_std);
    const double y = rng.gaussian(0.0, h_std);
    const double pl = path_loss_db(params.distance(k), params, shadow);
    const std::size_t i = static_cast<std::size_t>(k);
    real.beta[i] = db_to_linear(-pl);
    real.h_re[i] = x;
    real.h_im[i] = y;
    real.gain_sq[i] = real.beta[i] * (x * x + y * y);
  }
  return real;
}

double transmission_rate(double bandwidth_hz, const ChannelParams& params, double gain_sq) {
  if (bandwidth_hz < 0.0) throw std::domain_error("transmission_rate: negative bandwidth");
  const double power_w = dbm_to_watt(params.tx_power_dbm);
  const double noise_w = dbm_to_watt(params.noise_power_dbm);
  return bandwidth_hz * std::log2(1.0 + power_w * gain_sq / noise_w);
}

}  // namespace vrqoe
