#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace ergo {

// Philox4x32-10 block cipher used as a counter-based random generator.
// Each (key, counter) pair maps to four independent 32-bit words, so a stream
// is just a key plus an incrementing 128-bit counter: no state to hand between
// threads, and path i always reads blocks 0,1,2,... of its own stream no matter
// how work is scheduled.  Constants are the published reference values.
namespace philox {

inline constexpr uint32_t kMul0 = 0xD2511F53u;
inline constexpr uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr uint32_t kWeyl1 = 0xBB67AE85u;

inline std::array<uint32_t, 4> block(std::array<uint32_t, 4> ctr,
                                     std::array<uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    const uint64_t p0 = static_cast<uint64_t>(kMul0) * ctr[0];
    const uint64_t p1 = static_cast<uint64_t>(kMul1) * ctr[2];
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
    const uint32_t lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
    const uint32_t lo1 = static_cast<uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

}  // namespace philox

// One reproducible random stream, keyed by (seed, stream id).  Streams with
// distinct ids are independent for any fixed seed; simulations use one stream
// per path (id = path index) so results are bit-identical for any thread count.
class rng_stream {
 public:
  rng_stream(uint64_t seed, uint64_t stream_id)
      : key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)},
        base_{0u, 0u, static_cast<uint32_t>(stream_id),
              static_cast<uint32_t>(stream_id >> 32)} {}

  uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  uint64_t next_u64() {
    const uint64_t lo = next_u32();
    const uint64_t hi = next_u32();
    return lo | (hi << 32);
  }

  // Uniform on the open interval (0,1): 53-bit mantissa offset by half an ulp,
  // so logs of it are always finite.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the second member of each pair is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

 private:
  void refill() {
    std::array<uint32_t, 4> ctr = base_;
    ctr[0] = static_cast<uint32_t>(block_index_);
    ctr[1] = static_cast<uint32_t>(block_index_ >> 32);
    buf_ = philox::block(ctr, key_);
    ++block_index_;
    pos_ = 0;
  }

  std::array<uint32_t, 2> key_;
  std::array<uint32_t, 4> base_;  // [2],[3] hold the stream id
  std::array<uint32_t, 4> buf_{};
  uint64_t block_index_ = 0;
  int pos_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ergo
