#include "cpt/rng.hpp"

#include <sstream>

#include "cpt/errors.hpp"

namespace cpt {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = splitmix64(base ^ 0x243F6A8885A308D3ULL);
  h = splitmix64(h ^ (a + 0x452821E638D01377ULL));
  h = splitmix64(h ^ (b + 0xBE5466CF34E90C6CULL));
  return h;
}

double Rng::uniform() {
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

double Rng::uniform(double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(engine_);
}

int Rng::uniform_int(int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(engine_);
}

double Rng::normal() {
  return std::normal_distribution<double>(0.0, 1.0)(engine_);
}

double Rng::normal(double mean, double sd) {
  return std::normal_distribution<double>(mean, sd)(engine_);
}

double Rng::gamma(double shape, double rate) {
  // std::gamma_distribution takes shape-scale.
  return std::gamma_distribution<double>(shape, 1.0 / rate)(engine_);
}

int Rng::poisson(double lambda) {
  return std::poisson_distribution<int>(lambda)(engine_);
}

std::uint64_t Rng::next_u64() { return engine_(); }

std::string Rng::serialize() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

Rng Rng::deserialize(const std::string& blob) {
  Rng r(0);
  std::istringstream is(blob);
  is >> r.engine_;
  if (is.fail()) throw data_error("Rng::deserialize: malformed engine state");
  return r;
}

}  // namespace cpt
