#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>

namespace vrqoe {

// Derives a child seed from a base seed and a stream id (splitmix64 finalizer).
// Every stochastic component of a run pulls its seed through this so that one
// master seed pins the whole experiment.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

// Stream ids used across the project. Keeping them in one place avoids
// accidental collisions between independently seeded components.
namespace seed_stream {
inline constexpr std::uint64_t kTrace = 1;
inline constexpr std::uint64_t kEnv = 2;
inline constexpr std::uint64_t kNetwork = 3;
inline constexpr std::uint64_t kExplore = 4;
inline constexpr std::uint64_t kReplay = 5;
inline constexpr std::uint64_t kInference = 6;
inline constexpr std::uint64_t kEval = 7;
inline constexpr std::uint64_t kEvalTrace = 8;
}  // namespace seed_stream

// Seeded random source passed explicitly to everything that draws numbers.
// Gaussians come from Box-Muller on the raw engine output, so the sequence is
// fully determined by the seed (no library-dependent distribution state).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer on the inclusive range [lo, hi].
  int uniform_int(int lo, int hi);
  // Standard normal.
  double gaussian();
  double gaussian(double mean, double stddev);

  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  std::mt19937_64 engine_;
};

}  // namespace vrqoe
