#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "mbcs/spectrum.hpp"

namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
  return fs::temp_directory_path() / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("spectrum parsing accepts the documented format") {
  const auto p = temp_file("mbcs_spec_ok.csv");
  write_text(p, "# detector=test\nchannel,count\r\n1,5\n2,7\n");
  const auto spec = mbcs::read_spectrum(p);
  REQUIRE(spec.channels.size() == 2);
  CHECK(spec.channels[0] == 1);
  CHECK(spec.channels[1] == 2);
  CHECK(spec.counts[0] == 5.0);
  CHECK(spec.counts[1] == 7.0);
  CHECK(spec.metadata.at("detector") == "test");
  fs::remove(p);
}

TEST_CASE("spectrum parsing rejects malformed input with line numbers") {
  const auto p = temp_file("mbcs_spec_bad.csv");

  write_text(p, "channel,count\n1,5\n2,-3\n");
  try {
    mbcs::read_spectrum(p);
    FAIL("expected ParseError");
  } catch (const mbcs::ParseError& e) {
    CHECK(e.line() == 3);
  }

  write_text(p, "channel,count\n1,nan\n");
  CHECK_THROWS_AS(mbcs::read_spectrum(p), mbcs::ParseError);

  write_text(p, "channel,count\n2,5\n1,6\n");
  CHECK_THROWS_AS(mbcs::read_spectrum(p), mbcs::ParseError);

  write_text(p, "bin,value\n1,5\n");
  CHECK_THROWS_AS(mbcs::read_spectrum(p), mbcs::ParseError);

  write_text(p, "channel,count\n1,abc\n");
  CHECK_THROWS_AS(mbcs::read_spectrum(p), mbcs::ParseError);

  write_text(p, "channel,count\n");
  CHECK_THROWS_AS(mbcs::read_spectrum(p), mbcs::EmptySpectrum);

  CHECK_THROWS_AS(mbcs::read_spectrum(temp_file("mbcs_no_such_file.csv")),
                  mbcs::IoError);
  fs::remove(p);
}

TEST_CASE("synthetic fixture: deterministic, positive, round-trips") {
  const auto a = mbcs::synthetic_spectrum(7, 512);
  const auto b = mbcs::synthetic_spectrum(7, 512);
  CHECK(a.counts == b.counts);
  const auto c = mbcs::synthetic_spectrum(8, 512);
  CHECK(a.counts != c.counts);

  const auto truth = mbcs::synthetic_truth(512);
  REQUIRE(truth.size() == 512);
  for (const double t : truth) CHECK(t > 0.0);
  for (const double v : a.counts) CHECK(v >= 0.0);

  const auto p = temp_file("mbcs_fixture.csv");
  mbcs::write_spectrum(a, p);
  const auto back = mbcs::read_spectrum(p);
  CHECK(back.channels == a.channels);
  CHECK(back.counts == a.counts);  // 17 significant digits round-trip
  CHECK(back.metadata.at("seed") == "7");
  fs::remove(p);
}

TEST_CASE("a flat spectrum is returned unchanged by both methods") {
  mbcs::Spectrum spec;
  for (long c = 1; c <= 40; ++c) {
    spec.channels.push_back(c);
    spec.counts.push_back(50.0);
  }
  mbcs::SmoothJob job;
  job.method = mbcs::SmoothMethod::Both;
  job.h = 3.0;
  job.h0 = 6.0;
  job.h1 = 3.0;
  const auto result = mbcs::smooth_spectrum(spec, job);
  REQUIRE(result.ll.has_value());
  REQUIRE(result.mbc.has_value());
  for (std::size_t i = 0; i < result.channels.size(); ++i) {
    CHECK(result.ll->values[i] == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(result.mbc->values[i] == doctest::Approx(50.0).epsilon(1e-10));
  }
}

TEST_CASE("single-method LL smoothing is exactly the library fit") {
  const auto spec = mbcs::synthetic_spectrum(3, 300);
  mbcs::SmoothJob job;
  job.range_lo = 10;
  job.range_hi = 200;
  job.method = mbcs::SmoothMethod::LocalLinear;
  job.h = 4.0;
  const auto result = mbcs::smooth_spectrum(spec, job);
  REQUIRE(result.ll.has_value());
  CHECK_FALSE(result.mbc.has_value());

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < spec.channels.size(); ++i) {
    if (spec.channels[i] < 10 || spec.channels[i] > 200) continue;
    xs.push_back(static_cast<double>(spec.channels[i]));
    ys.push_back(spec.counts[i]);
  }
  const mbcs::SampleSet data(xs, ys);
  const auto direct = mbcs::local_linear_fit(data, 4.0, data.xs);
  REQUIRE(direct.values.size() == result.ll->values.size());
  for (std::size_t i = 0; i < direct.values.size(); ++i) {
    CHECK(result.ll->values[i] == direct.values[i]);  // bit-for-bit
  }
}

TEST_CASE("pinned-bandwidth smoothing sharpens the tallest peak and valley") {
  // ordering check against the known truth of the fixture
  const std::size_t n = 300;
  const auto truth = mbcs::synthetic_truth(n);
  const auto spec = mbcs::synthetic_spectrum(12, n);

  mbcs::SmoothJob job;
  job.range_lo = 40;
  job.range_hi = 160;
  job.method = mbcs::SmoothMethod::Both;
  job.h = 4.0;
  job.h0 = 8.0;
  job.h1 = 4.0;
  const auto result = mbcs::smooth_spectrum(spec, job);

  // locate the tallest truth peak and the deepest interior truth valley
  // inside the smoothed range
  std::size_t apex = 0, valley = 0;
  double apex_v = -1.0, valley_v = 1e300;
  for (std::size_t i = 0; i < result.channels.size(); ++i) {
    const std::size_t t = static_cast<std::size_t>(result.channels[i] - 1);
    if (truth[t] > apex_v) {
      apex_v = truth[t];
      apex = i;
    }
  }
  for (std::size_t i = 1; i + 1 < result.channels.size(); ++i) {
    const std::size_t t = static_cast<std::size_t>(result.channels[i] - 1);
    if (truth[t] < truth[t - 1] && truth[t] <= truth[t + 1] &&
        truth[t] < valley_v) {
      valley_v = truth[t];
      valley = i;
    }
  }
  REQUIRE(apex_v > 0.0);
  REQUIRE(valley_v < 1e300);

  // the corrected fit rises higher at the peak and dips lower in the valley
  CHECK(result.mbc->values[apex] > result.ll->values[apex]);
  CHECK(result.mbc->values[valley] < result.ll->values[valley]);
}

TEST_CASE("result files follow the column contract") {
  const auto spec = mbcs::synthetic_spectrum(5, 200);
  mbcs::SmoothJob job;
  job.range_lo = 20;
  job.range_hi = 150;
  job.h = 4.0;
  job.h0 = 8.0;
  job.h1 = 4.0;
  job.ci_level = 0.95;
  const auto result = mbcs::smooth_spectrum(spec, job);

  const auto p = temp_file("mbcs_result.csv");
  mbcs::write_results(result, p);
  const std::string text = slurp(p);
  CHECK(text.rfind("channel,raw_count,ll_fit,mbc_fit,ci_lo,ci_hi\n", 0) == 0);

  // parse back and compare at full precision
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    long channel;
    double raw, ll, mbc, lo, hi;
    fields >> channel >> raw >> ll >> mbc >> lo >> hi;
    CHECK(channel == result.channels[row]);
    CHECK(raw == result.raw_counts[row]);
    CHECK(ll == result.ll->values[row]);
    CHECK(mbc == result.mbc->values[row]);
    CHECK(lo == result.ci->lower[row]);
    CHECK(hi == result.ci->upper[row]);
    ++row;
  }
  CHECK(row == result.channels.size());
  fs::remove(p);

  // header-only file when nothing was computed
  mbcs::SmoothResult empty;
  const auto pe = temp_file("mbcs_empty.csv");
  mbcs::write_results(empty, pe);
  CHECK(slurp(pe) == "channel,raw_count\n");
  fs::remove(pe);
}

TEST_CASE("cv tables are written for both methods") {
  const auto spec = mbcs::synthetic_spectrum(9, 160);
  mbcs::SmoothJob job;
  job.range_lo = 30;
  job.range_hi = 130;
  job.cv = true;
  job.grid = mbcs::BandwidthGrid::log_spaced(2.0, 12.0, 5);
  const auto result = mbcs::smooth_spectrum(spec, job);
  REQUIRE(result.cv_ll.has_value());
  REQUIRE(result.cv_mbc.has_value());
  CHECK(result.cv_ll->table.size() == 5);
  CHECK(result.cv_mbc->table.size() == 25);

  const auto p = temp_file("mbcs_cv.csv");
  mbcs::write_cv_tables(result, p);
  const std::string text = slurp(p);
  CHECK(text.rfind("method,h0,h1,score\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 5 + 25);
  fs::remove(p);
}

TEST_CASE("job validation") {
  const auto spec = mbcs::synthetic_spectrum(2, 100);
  mbcs::SmoothJob job;
  job.range_lo = 50;
  job.range_hi = 51;
  job.h = 2.0;
  CHECK_THROWS_AS(mbcs::smooth_spectrum(spec, job), mbcs::Error);

  mbcs::SmoothJob nobw;
  nobw.method = mbcs::SmoothMethod::LocalLinear;
  CHECK_THROWS_AS(mbcs::smooth_spectrum(spec, nobw), mbcs::Error);

  mbcs::SmoothJob nopair;
  nopair.method = mbcs::SmoothMethod::Mbc;
  nopair.h0 = 3.0;
  CHECK_THROWS_AS(mbcs::smooth_spectrum(spec, nopair), mbcs::Error);
}
