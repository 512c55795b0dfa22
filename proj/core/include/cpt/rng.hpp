#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace cpt {

/// splitmix64 finalizer; the building block of all seed derivation.
std::uint64_t splitmix64(std::uint64_t x);

/// Stable two-key seed derivation: seed = f(base, a, b).  Used to give every
/// location (row, col) and every forecast member its own independent stream,
/// so results do not depend on scheduling or worker count.  The mix function
/// is part of the on-disk reproducibility contract and must not change.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b);

/// Random number source owned by exactly one chain / worker at a time.
/// Distribution objects are constructed fresh per call so the only state
/// is the mt19937_64 engine, which serializes exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();                          // U(0, 1)
  double uniform(double a, double b);        // U(a, b)
  int uniform_int(int lo, int hi);           // inclusive bounds
  double normal();                           // N(0, 1)
  double normal(double mean, double sd);
  double gamma(double shape, double rate);   // shape-rate convention
  int poisson(double lambda);
  std::uint64_t next_u64();

  std::string serialize() const;
  static Rng deserialize(const std::string& blob);

  std::mt19937_64& engine() { return engine_; }

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cpt
