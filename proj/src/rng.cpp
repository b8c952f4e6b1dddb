#include "vrqoe/rng.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace vrqoe {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ splitmix64(stream));
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  return mix_seed(mix_seed(base, stream), index);
}

double Rng::uniform() {
  // 53 random bits mapped onto [0, 1).
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: hi < lo");
  const std::uint64_t range = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
  // Rejection sampling keeps the draw unbiased for ranges that do not divide 2^64.
  const std::uint64_t limit = range * (UINT64_MAX / range);
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return lo + static_cast<int>(v % range);
}

double Rng::gaussian() {
  // Box-Muller, cosine branch only: one gaussian per two uniforms, no carried
  // state beyond the engine itself.
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double Rng::gaussian(double mean, double stddev) {
  return mean + stddev * gaussian();
}

void Rng::save(std::ostream& out) const {
  out << engine_;
}

void Rng::load(std::istream& in) {
  in >> engine_;
  if (!in) throw std::runtime_error("Rng::load: malformed engine state");
}

}  // namespace vrqoe
