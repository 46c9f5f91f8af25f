#include "vort/rng.hpp"

#include <cmath>

namespace {

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

}  // namespace

namespace vort {

std::array<std::uint64_t, 4> Philox4x64::block() {
  for (int i = 0; i < 4; ++i) {
    if (++counter[i] != 0) break;
  }
  std::array<std::uint64_t, 4> c = counter;
  std::uint64_t k0 = key[0];
  std::uint64_t k1 = key[1];
  for (int r = 0; r < 10; ++r) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return c;
}

GaussianStream::GaussianStream(std::uint64_t seed, std::uint64_t stream_id) {
  eng_.key = {seed, stream_id};
}

std::uint64_t GaussianStream::raw() {
  if (buf_pos_ == 4) {
    buf_ = eng_.block();
    buf_pos_ = 0;
  }
  return buf_[buf_pos_++];
}

double GaussianStream::uniform() {
  return (static_cast<double>(raw() >> 11) + 1.0) * 0x1p-53;
}

double GaussianStream::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

std::uint64_t GaussianStream::uniform_index(std::uint64_t n) {
  return raw() % n;  // bias ~ n / 2^64, irrelevant at bootstrap sizes
}

}  // namespace vort
