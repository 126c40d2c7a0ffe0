#include "amortss/core/rng.hpp"

#include <cmath>

namespace amortss {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_tag(std::string_view tag) {
  // FNV-1a, then mixed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : tag) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t x = splitmix64(seed) ^ splitmix64(stream_id + 0x632BE59BD9B4E019ULL);
  for (auto& word : s_) {
    x = splitmix64(x);
    word = x;
  }
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

RngStream::result_type RngStream::operator()() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

RngStream RngStream::derive(std::uint64_t tag) const {
  return RngStream(seed_, splitmix64(stream_id_ ^ splitmix64(tag + 0xA0761D6478BD642FULL)));
}

RngStream RngStream::derive(std::string_view tag) const { return derive(hash_tag(tag)); }

RngStream RngStream::derive(std::string_view tag, std::uint64_t index) const {
  return derive(hash_tag(tag) ^ splitmix64(index));
}

double RngStream::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int RngStream::uniform_int(int lo, int hi) {
  std::uniform_int_distribution<int> dist(lo, hi);
  return dist(*this);
}

double RngStream::normal() { return normal_(*this); }

double RngStream::normal(double mean, double stddev) { return mean + stddev * normal_(*this); }

double RngStream::gamma(double shape, double scale) {
  std::gamma_distribution<double> dist(shape, scale);
  return dist(*this);
}

double RngStream::student_t(double dof) {
  std::student_t_distribution<double> dist(dof);
  return dist(*this);
}

bool RngStream::bernoulli(double p) { return uniform() < p; }

}  // namespace amortss
