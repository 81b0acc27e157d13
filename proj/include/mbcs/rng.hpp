#pragma once

#include <cstdint>

namespace mbcs {

/// Standard normal quantile function (Wichura's PPND16 rational
/// approximations, full double accuracy). Requires 0 < p < 1.
double normal_quantile(double p);

/// Deterministic counter-style random stream.
///
/// Every draw is a pure function of (seed, replicate, purpose, position):
/// the key is derived by mixing the three identifiers, then values come from
/// the splitmix64 sequence for that key. Distinct replicates and purposes
/// give statistically independent streams, so parallel and serial runs of a
/// simulation study produce identical results.
///
/// Stream layout used by the library:
///   Purpose::Design   covariate draws (replicate 0 when the design is fixed)
///   Purpose::Noise    regression noise, one stream per replicate
///   Purpose::Fixture  synthetic spectrum noise
class Stream {
 public:
  enum class Purpose : std::uint64_t {
    Generic = 0,
    Design = 1,
    Noise = 2,
    Fixture = 3,
  };

  Stream(std::uint64_t seed, std::uint64_t replicate, Purpose purpose);

  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1); 53-bit resolution, never 0 or 1.
  double uniform01();
  double uniform(double lo, double hi);

  /// Standard normal via the inverse-CDF transform, so any implementation
  /// of this stream contract reproduces draws bit-for-bit.
  double normal();
  double normal(double mean, double sd);

 private:
  std::uint64_t state_;
};

}  // namespace mbcs
