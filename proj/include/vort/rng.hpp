#pragma once

#include <array>
#include <cstdint>

namespace vort {

/* Philox4x64-10 counter-based generator.
 *
 * The 256-bit counter is incremented little-endian (word 0 first, with
 * carry) BEFORE each block is produced, so block i of the stream is the
 * bijection applied to counter value i+1 when starting from a zeroed
 * counter. This matches the stream position convention of the reference
 * implementation the known-answer tests were frozen against.
 */
struct Philox4x64 {
  std::array<std::uint64_t, 4> counter{{0, 0, 0, 0}};
  std::array<std::uint64_t, 2> key{{0, 0}};

  static constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
  static constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
  static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

  // advances the counter and returns the next 4-word output block
  std::array<std::uint64_t, 4> block();
};

/* Buffered stream of doubles on top of Philox: uniforms on (0, 1] and
 * standard normals via Box-Muller (two uniforms per antithetic pair, the
 * second normal cached). Streams with distinct (seed, stream_id) keys are
 * independent; the draw sequence is a pure function of the key.
 */
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t raw();       // next 64-bit word
  double uniform();          // (0, 1]
  double normal();           // N(0, 1)
  std::uint64_t uniform_index(std::uint64_t n);  // {0, ..., n-1}

 private:
  Philox4x64 eng_;
  std::array<std::uint64_t, 4> buf_{};
  int buf_pos_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace vort
