#pragma once

// Reproducible random streams.
//
// Engine: boost::random::mt19937_64. Distributions come from Boost.Random, whose algorithms are
// fixed in the library source (unlike <random> distributions, which vary by standard library),
// so a (seed, stream) pair yields the same draws on every platform with the same Boost release.

#include "bskm/core.hpp"

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/student_t_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/version.hpp>

#include <cstdint>
#include <string>

namespace bskm {

inline std::string rng_algorithm_id() {
  return "mt19937_64/boost.random-" + std::to_string(BOOST_VERSION / 100000) + "." +
         std::to_string(BOOST_VERSION / 100 % 1000) + "/splitmix64-streams";
}

/// SplitMix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) : engine_(derive_seed(seed, stream)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return boost::random::uniform_01<double>{}(engine_); }
  double exponential() { return exponential_(engine_); }
  double student_t(double dof) { return boost::random::student_t_distribution<double>(dof)(engine_); }

  Vector normal_vector(Eigen::Index d) {
    Vector v(d);
    for (double& x : v) x = normal();
    return v;
  }

  /// Uniform draw from the open simplex (normalized exponentials, i.e. Dirichlet(1,...,1)).
  Vector simplex_point(Eigen::Index d) {
    Vector v(d);
    for (double& x : v) x = exponential() + 1e-300;
    return v / v.sum();
  }

  boost::random::mt19937_64& engine() { return engine_; }

 private:
  boost::random::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
  boost::random::exponential_distribution<double> exponential_;
};

}  // namespace bskm
