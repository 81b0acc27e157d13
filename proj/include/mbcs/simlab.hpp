#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mbcs/bandwidth.hpp"
#include "mbcs/core.hpp"

namespace mbcs {

/// A benchmark regression function with its noise level and design law
/// (covariates drawn uniformly on [design_lo, design_hi]).
struct TestFunction {
  const char* id;
  double (*evaluate)(double);
  double noise_sd;
  double design_lo;
  double design_hi;
};

/// Registry lookup by id: "local", "m1", "m2", "m3", "m4".
const TestFunction& test_function(std::string_view id);

/// The four benchmark functions of the global study, in order.
const std::vector<TestFunction>& benchmark_functions();

struct SimConfig {
  std::size_t n = 100;
  std::size_t replications = 100;
  std::uint64_t seed = 1;
  /// Reuse the replicate-0 design for every replicate (the local study keeps
  /// one design; the global study redraws per replicate).
  bool fixed_design = false;
};

/// Deterministic draw of one replicate: covariates sorted ascending, then
/// responses f(x) + noise from the per-replicate noise stream. Identical
/// (seed, replicate_index) always yields an identical sample.
SampleSet generate_sample(const TestFunction& f, const SimConfig& cfg,
                          std::size_t replicate_index);

/// One Monte-Carlo row of the pointwise study: an estimator configuration
/// and its bias^2 / variance / MSE at the study point.
struct LocalStudyRow {
  FitMethod method;
  double h;   ///< LL: bandwidth; MBC: correction bandwidth h1
  double h0;  ///< MBC pilot bandwidth; NaN for LL rows
  double bias2;
  double variance;
  double mse;  ///< bias2 + variance by definition
  std::size_t dropped;
};

struct LocalStudyReport {
  std::string function_id;
  double at;
  std::size_t n;
  std::size_t replications;
  std::uint64_t seed;
  std::vector<LocalStudyRow> rows;

  /// MSE-minimizing LL row / MBC row for a given pilot bandwidth.
  const LocalStudyRow& optimal_ll() const;
  const LocalStudyRow& optimal_mbc(double h0) const;
};

/// Pointwise bias/variance study at `at`: LL over h_grid, MBC over
/// h0_list x h1_grid, all on the same replicated samples. Replicates with a
/// degenerate fit are dropped per row; more than 5% dropped in any row
/// fails the run.
LocalStudyReport local_study(const TestFunction& f, const SimConfig& cfg,
                             const BandwidthGrid& h_grid,
                             const std::vector<double>& h0_list,
                             const BandwidthGrid& h1_grid, double at,
                             unsigned threads = 0);

/// Trapezoid-rule integrated squared error of a fitted curve against the
/// true function over [lo, hi], on a 1001-point uniform quadrature grid
/// (curve values linearly interpolated). Throws GridTooCoarse when the fit
/// grid has fewer than 101 points inside the interval or does not cover it.
double ise(const FitCurve& fit, const TestFunction& f, double lo, double hi);

struct GlobalReplicate {
  std::size_t index;
  double sel_h;
  double ise_ll;
  double sel_h0;
  double sel_h1;
  double ise_mbc;
};

struct GlobalFunctionReport {
  std::string id;
  double med_h;
  double med_ise_ll;
  double med_h0;
  double med_h1;
  double med_ise_mbc;
  double r_ise;  ///< median ISE(LL) / median ISE(MBC)
  std::size_t dropped;
  std::vector<GlobalReplicate> replicates;
};

struct GlobalStudyReport {
  std::size_t n;
  std::size_t replications;
  std::uint64_t seed;
  std::vector<GlobalFunctionReport> functions;
};

using Progress = std::function<void(std::size_t done, std::size_t total)>;

/// Global CV + ISE study: per replicate, draw data, select h by LOO-CV for
/// LL and (h0, h1) for MBC, fit at the selections, integrate squared error
/// over [0, 1]. Reports medians (midpoint rule) and R_ISE per function.
GlobalStudyReport global_study(const std::vector<TestFunction>& functions,
                               const SimConfig& cfg,
                               const BandwidthGrid& grid_ll,
                               const BandwidthGrid& grid0,
                               const BandwidthGrid& grid1,
                               unsigned threads = 0,
                               const Progress& progress = {});

/// Per-grid-point mean and interquartile envelope of both estimators under
/// CV-selected bandwidths, across replicates.
struct EnvelopeTable {
  std::string function_id;
  std::vector<double> grid;
  std::vector<double> truth;
  std::vector<double> ll_mean, ll_q25, ll_q75;
  std::vector<double> mbc_mean, mbc_q25, mbc_q75;
  std::size_t dropped = 0;
};

EnvelopeTable envelope_data(const TestFunction& f, const SimConfig& cfg,
                            std::span<const double> grid,
                            const BandwidthGrid& grid_ll,
                            const BandwidthGrid& grid0,
                            const BandwidthGrid& grid1, unsigned threads = 0,
                            const Progress& progress = {});

/// Midpoint-rule median (even counts average the two central order stats).
double median(std::vector<double> values);

/// count points lo..hi inclusive, evenly spaced, endpoints exact.
std::vector<double> uniform_grid(double lo, double hi, std::size_t count);

// ---- report files ----
// CSV columns are documented in the README; every float is written with 17
// significant digits so reruns compare byte-for-byte.

void write_local_study_csv(const LocalStudyReport& report,
                           const std::filesystem::path& path);
void write_local_study_json(const LocalStudyReport& report,
                            const std::filesystem::path& path);
void write_global_study_csv(const GlobalStudyReport& report,
                            const std::filesystem::path& summary_path,
                            const std::filesystem::path& replicates_path);
void write_global_study_json(const GlobalStudyReport& report,
                             const std::filesystem::path& path);
void write_envelope_csv(const EnvelopeTable& table,
                        const std::filesystem::path& path);

/// Canned study configurations matching the shipped reproduction suites.
namespace studies {

inline constexpr std::uint64_t kDefaultSeed = 57;

LocalStudyReport table1(std::uint64_t seed = kDefaultSeed,
                        unsigned threads = 0);
GlobalStudyReport table2(std::uint64_t seed = kDefaultSeed,
                         unsigned threads = 0, const Progress& progress = {});
EnvelopeTable figure4(std::uint64_t seed = kDefaultSeed, unsigned threads = 0,
                      const Progress& progress = {});

}  // namespace studies

}  // namespace mbcs
