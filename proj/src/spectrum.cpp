#include "mbcs/spectrum.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mbcs/mbc.hpp"
#include "mbcs/rng.hpp"

namespace mbcs {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n' ||
                        s.back() == ' ' || s.back() == '\t')) {
    s.pop_back();
  }
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return s.substr(i);
}

}  // namespace

Spectrum read_spectrum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  Spectrum spec;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = strip(line);
    if (s.empty()) continue;
    if (s[0] == '#') {
      const std::string body = strip(s.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string::npos) {
        spec.metadata[strip(body.substr(0, eq))] = strip(body.substr(eq + 1));
      }
      continue;
    }
    if (!header_seen) {
      if (s != "channel,count") {
        throw ParseError(lineno, "expected header 'channel,count'");
      }
      header_seen = true;
      continue;
    }
    const auto comma = s.find(',');
    if (comma == std::string::npos) {
      throw ParseError(lineno, "expected 'channel,count'");
    }
    long channel = 0;
    double count = 0;
    try {
      std::size_t used = 0;
      channel = std::stol(s.substr(0, comma), &used);
      if (used != comma) throw std::invalid_argument("channel");
      const std::string cs = strip(s.substr(comma + 1));
      count = std::stod(cs, &used);
      if (used != cs.size()) throw std::invalid_argument("count");
    } catch (const std::exception&) {
      throw ParseError(lineno, "malformed number");
    }
    if (std::isnan(count)) throw ParseError(lineno, "count is NaN");
    if (count < 0) throw ParseError(lineno, "negative count");
    if (!spec.channels.empty() && channel <= spec.channels.back()) {
      throw ParseError(lineno, "channels must be strictly increasing");
    }
    spec.channels.push_back(channel);
    spec.counts.push_back(count);
  }
  if (!header_seen) throw ParseError(lineno, "missing 'channel,count' header");
  if (spec.channels.empty()) throw EmptySpectrum("spectrum has no data rows");
  return spec;
}

void write_spectrum(const Spectrum& spectrum,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& [key, value] : spectrum.metadata) {
    out << "# " << key << "=" << value << '\n';
  }
  out << "channel,count\n";
  for (std::size_t i = 0; i < spectrum.channels.size(); ++i) {
    out << spectrum.channels[i] << ',' << fmt(spectrum.counts[i]) << '\n';
  }
}

SmoothResult smooth_spectrum(const Spectrum& spectrum, const SmoothJob& job) {
  if (spectrum.channels.empty()) throw EmptySpectrum("empty spectrum");
  const long lo = job.range_lo != 0 ? job.range_lo : spectrum.channels.front();
  const long hi = job.range_hi != 0 ? job.range_hi : spectrum.channels.back();
  if (lo > hi) throw Error("empty channel range");

  SmoothResult result;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < spectrum.channels.size(); ++i) {
    const long c = spectrum.channels[i];
    if (c < lo || c > hi) continue;
    result.channels.push_back(c);
    result.raw_counts.push_back(spectrum.counts[i]);
    xs.push_back(static_cast<double>(c));
    ys.push_back(spectrum.counts[i]);
  }
  if (xs.size() < 3) throw Error("channel range selects fewer than 3 bins");
  const SampleSet data(std::move(xs), std::move(ys));
  const std::vector<double>& grid = data.xs;

  const bool want_ll = job.method != SmoothMethod::Mbc;
  const bool want_mbc = job.method != SmoothMethod::LocalLinear;

  double h = job.h.value_or(0.0);
  double h0 = job.h0.value_or(0.0);
  double h1 = job.h1.value_or(0.0);
  if (job.cv) {
    const BandwidthGrid cv_grid =
        job.grid ? *job.grid : default_grid(data);
    if (want_ll) {
      result.cv_ll = select_ll(data, cv_grid);
      h = result.cv_ll->selected.h0;
    }
    if (want_mbc) {
      result.cv_mbc = select_mbc(data, cv_grid, cv_grid, 0);
      h0 = result.cv_mbc->selected.h0;
      h1 = *result.cv_mbc->selected.h1;
    }
  } else {
    if (want_ll && !(h > 0.0)) {
      throw Error("pinned mode requires --h for the local linear fit");
    }
    if (want_mbc && (!(h0 > 0.0) || !(h1 > 0.0))) {
      throw Error("pinned mode requires --h0 and --h1 for the MBC fit");
    }
  }

  if (want_ll) result.ll = local_linear_fit(data, h, grid);
  if (want_mbc) {
    result.mbc =
        mbc_fit(data, MbcConfig::with_default_clamp(h0, h1, data), grid);
    result.clamp_engaged = result.mbc->clamp_engaged;
  }
  if (job.ci_level) {
    const FitCurve& target = result.mbc ? *result.mbc : *result.ll;
    result.ci =
        pointwise_ci(target, data, sigma_first_difference(data), *job.ci_level);
  }
  return result;
}

void write_results(const SmoothResult& result,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "channel,raw_count";
  if (result.ll) out << ",ll_fit";
  if (result.mbc) out << ",mbc_fit";
  if (result.ci) out << ",ci_lo,ci_hi";
  out << '\n';
  for (std::size_t i = 0; i < result.channels.size(); ++i) {
    out << result.channels[i] << ',' << fmt(result.raw_counts[i]);
    if (result.ll) out << ',' << fmt(result.ll->values[i]);
    if (result.mbc) out << ',' << fmt(result.mbc->values[i]);
    if (result.ci) {
      out << ',' << fmt(result.ci->lower[i]) << ',' << fmt(result.ci->upper[i]);
    }
    out << '\n';
  }
}

void write_cv_tables(const SmoothResult& result,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "method,h0,h1,score\n";
  if (result.cv_ll) {
    for (const auto& row : result.cv_ll->table) {
      out << "ll," << fmt(row.h0) << ",," << fmt(row.score) << '\n';
    }
  }
  if (result.cv_mbc) {
    for (const auto& row : result.cv_mbc->table) {
      out << "mbc," << fmt(row.h0) << ',' << fmt(*row.h1) << ','
          << fmt(row.score) << '\n';
    }
  }
}

std::vector<double> synthetic_truth(std::size_t n_channels) {
  struct Peak {
    double center, amplitude, width;
  };
  // Photo-peak layout loosely modeled on a one-minute NaI measurement of a
  // strong source: overlapping low-energy peaks with genuinely curved
  // valleys between them, weaker structure further out, exponential
  // continuum plus a constant floor.
  static constexpr Peak peaks[] = {
      {70.0, 1300.0, 6.0}, {105.0, 850.0, 7.0},  {132.0, 700.0, 6.5},
      {190.0, 300.0, 9.0}, {243.0, 220.0, 16.0}, {420.0, 160.0, 22.0},
  };
  std::vector<double> truth(n_channels);
  for (std::size_t i = 0; i < n_channels; ++i) {
    const double c = static_cast<double>(i + 1);
    double v = 1000.0 * std::exp(-c / 60.0) + 80.0;
    for (const Peak& p : peaks) {
      const double d = (c - p.center) / p.width;
      v += p.amplitude * std::exp(-0.5 * d * d);
    }
    truth[i] = v;
  }
  return truth;
}

Spectrum synthetic_spectrum(std::uint64_t seed, std::size_t n_channels) {
  const std::vector<double> truth = synthetic_truth(n_channels);
  Stream noise(seed, 0, Stream::Purpose::Fixture);
  Spectrum spec;
  spec.channels.resize(n_channels);
  spec.counts.resize(n_channels);
  for (std::size_t i = 0; i < n_channels; ++i) {
    spec.channels[i] = static_cast<long>(i + 1);
    const double draw = truth[i] + std::sqrt(truth[i]) * noise.normal();
    spec.counts[i] = std::max(0.0, draw);
  }
  spec.metadata["source"] = "synthetic";
  spec.metadata["model"] = "gaussian peaks on exponential background";
  spec.metadata["noise"] = "gaussian, variance = mean";
  spec.metadata["seed"] = std::to_string(seed);
  return spec;
}

}  // namespace mbcs
