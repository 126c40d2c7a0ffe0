#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace amortss {

/// Deterministic random stream identified by (seed, stream_id).
///
/// The engine is xoshiro256** whose state is expanded from the pair with
/// SplitMix64, so equal pairs give identical sequences and different stream
/// ids give unrelated ones. Streams are cheap to create; parallel workers
/// receive their own stream through derive() instead of sharing one.
///
/// Satisfies UniformRandomBitGenerator, so std distributions accept it.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Child stream keyed by `tag`; independent of how much this stream has
  /// already been consumed.
  RngStream derive(std::uint64_t tag) const;
  RngStream derive(std::string_view tag) const;
  RngStream derive(std::string_view tag, std::uint64_t index) const;

  /// Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer on the closed range [lo, hi].
  int uniform_int(int lo, int hi);
  double normal();
  double normal(double mean, double stddev);
  /// Gamma with the given shape and scale (mean = shape * scale).
  double gamma(double shape, double scale);
  double student_t(double dof);
  bool bernoulli(double p);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t s_[4];
  std::normal_distribution<double> normal_;
};

/// 64-bit mixing function used for seeding and stream derivation.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_tag(std::string_view tag);

}  // namespace amortss
