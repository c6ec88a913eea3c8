#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace dotmarg {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). The output is a
// pure function of (counter, key), so every photon packet owns an independent,
// replayable stream regardless of which worker thread runs it.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

// Uniform stream keyed by a 64-bit seed and addressed by a (stream, substream)
// pair. Each 128-bit block yields two doubles with 53 random bits apiece.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint32_t substream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream),
        substream_(substream) {}

  // Uniform on the open interval (0, 1).
  double uniform() {
    if (cursor_ == 2) refill();
    return buffer_[cursor_++];
  }

  // Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * 3.14159265358979323846 * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  std::uint64_t blocks_used() const { return block_; }

 private:
  static double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  void refill() {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32) ^ substream_,
                                  static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    const auto out = Philox4x32::generate(ctr, key_);
    buffer_ = {to_open_unit(out[0], out[1]), to_open_unit(out[2], out[3])};
    cursor_ = 0;
    ++block_;
  }

  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint32_t substream_;
  std::uint64_t block_ = 0;
  std::array<double, 2> buffer_{};
  int cursor_ = 2;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Child seed for a named purpose, so one root seed drives every random draw.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t purpose) {
  const auto out = Philox4x32::generate(
      {static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(purpose >> 32), 0x5EEDu, 0xD07u},
      {static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32)});
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace dotmarg
