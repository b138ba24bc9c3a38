#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

#include <Eigen/Dense>

namespace scopf::rng {

// SplitMix64 finalizer; bijective 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic counter-based stream. The key is derived from (seed, ids...),
// so a stream keyed by (seed, purpose, chain, step) is reproducible regardless
// of which thread runs it or in what order streams are consumed.
class Stream {
 public:
  Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
    key_ = mix64(seed);
    for (std::uint64_t id : ids) key_ = mix64(key_ ^ mix64(id + 0x100));
  }

  std::uint64_t next_u64() { return mix64(key_ + ++ctr_ * 0x9e3779b97f4a7c15ull); }

  // Uniform on the open interval (0,1); both endpoints excluded so logs and
  // logits of draws stay finite.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    constexpr double two_pi = 6.283185307179586476925286766559;
    double u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = two_pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Eigen::VectorXd normal_vec(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t ctr_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Fixed purpose tags so every consumer of randomness draws from a distinct
// substream of the single run seed.
enum Purpose : std::uint64_t {
  kInitDispatch = 1,
  kInitContingency = 2,
  kDispatchChain = 3,
  kContingencyChain = 4,
  kStress = 5,
  kGeneric = 6,
};

}  // namespace scopf::rng
