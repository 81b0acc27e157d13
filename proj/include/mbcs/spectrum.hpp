#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mbcs/bandwidth.hpp"
#include "mbcs/core.hpp"

namespace mbcs {

/// Binned count data: strictly increasing channel numbers with non-negative
/// counts, plus free-form metadata (detector, count time, ...).
struct Spectrum {
  std::vector<long> channels;
  std::vector<double> counts;
  std::map<std::string, std::string> metadata;
};

/// Parse a `channel,count` CSV (header required; `# key=value` metadata
/// lines may precede it; LF or CRLF). Rejects NaN and negative counts and
/// non-increasing channels with a ParseError carrying the line number.
Spectrum read_spectrum(const std::filesystem::path& path);

/// Inverse of read_spectrum; metadata first, counts at full precision.
void write_spectrum(const Spectrum& spectrum,
                    const std::filesystem::path& path);

enum class SmoothMethod { LocalLinear, Mbc, Both };

/// One smoothing request over a channel range. Bandwidths are in channel
/// units. In CV mode the grid defaults to default_grid() over the selected
/// range; pinned mode requires h (LL) and/or h0,h1 (MBC).
struct SmoothJob {
  long range_lo = 0;  ///< first channel, inclusive; 0 = spectrum start
  long range_hi = 0;  ///< last channel, inclusive; 0 = spectrum end
  SmoothMethod method = SmoothMethod::Both;
  bool cv = false;
  std::optional<double> h;
  std::optional<double> h0;
  std::optional<double> h1;
  std::optional<BandwidthGrid> grid;      ///< CV grid override
  std::optional<double> ci_level;         ///< confidence band level
};

struct SmoothResult {
  std::vector<long> channels;
  std::vector<double> raw_counts;
  std::optional<FitCurve> ll;
  std::optional<FitCurve> mbc;
  std::optional<CiBand> ci;  ///< band around MBC when computed, else LL
  std::optional<CvResult> cv_ll;
  std::optional<CvResult> cv_mbc;
  int clamp_engaged = 0;
};

/// Treats (channel, count) as regression data and runs the requested
/// methods; fits are evaluated at every channel in the range.
SmoothResult smooth_spectrum(const Spectrum& spectrum, const SmoothJob& job);

/// CSV `channel,raw_count[,ll_fit][,mbc_fit][,ci_lo,ci_hi]`; columns present
/// iff computed, numbers at 17 significant digits.
void write_results(const SmoothResult& result,
                   const std::filesystem::path& path);

/// CSV `method,h0,h1,score` of any CV tables in the result (h1 empty for
/// the single-bandwidth method).
void write_cv_tables(const SmoothResult& result,
                     const std::filesystem::path& path);

/// Noiseless truth behind the synthetic fixture: Gaussian photo-peaks on a
/// decaying exponential background, strictly positive everywhere.
std::vector<double> synthetic_truth(std::size_t n_channels = 1024);

/// Deterministic synthetic spectrum: truth plus seeded Gaussian noise with
/// variance equal to the local mean (Poisson-like), floored at zero.
/// Channels are numbered from 1.
Spectrum synthetic_spectrum(std::uint64_t seed, std::size_t n_channels = 1024);

}  // namespace mbcs
