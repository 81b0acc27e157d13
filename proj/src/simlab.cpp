#include "mbcs/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>

#include <json.hpp>

#include "mbcs/parallel.hpp"
#include "mbcs/rng.hpp"

namespace mbcs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double f_local(double x) {
  return 3.0 + 3.0 * std::pow(std::fabs(x), 2.5) + x * x +
         4.0 * std::cos(10.0 * x);
}
double f_m1(double x) { return std::sin(5.0 * std::numbers::pi * x); }
double f_m2(double x) { return std::sin(15.0 * std::numbers::pi * x); }
double f_m3(double x) {
  return 1.0 + x * (-48.0 + x * (218.0 + x * (-315.0 + x * 145.0)));
}
double f_m4(double x) {
  const double a = x - 0.25;
  const double b = x - 0.75;
  return 0.3 * std::exp(-64.0 * a * a) + 0.7 * std::exp(-256.0 * b * b);
}

const std::vector<TestFunction>& registry() {
  static const std::vector<TestFunction> fs = {
      {"local", &f_local, 0.1, -1.0, 1.0},
      {"m1", &f_m1, 0.3, -0.2, 1.2},
      {"m2", &f_m2, 0.3, -0.2, 1.2},
      {"m3", &f_m3, 0.3, -0.2, 1.2},
      {"m4", &f_m4, 0.05, -0.2, 1.2},
  };
  return fs;
}

// 17 significant digits: enough to round-trip any double, so equal runs
// produce byte-identical files.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t m = sorted.size();
  if (m == 1) return sorted[0];
  const double pos = p * static_cast<double>(m - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= m) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct MeanVar {
  double mean;
  double variance;  // sample variance, denominator count-1
};

MeanVar mean_var(const std::vector<double>& v) {
  const double cnt = static_cast<double>(v.size());
  double mean = 0;
  for (const double e : v) mean += e;
  mean /= cnt;
  double ss = 0;
  for (const double e : v) ss += (e - mean) * (e - mean);
  return {mean, v.size() > 1 ? ss / (cnt - 1.0) : 0.0};
}

}  // namespace

const TestFunction& test_function(std::string_view id) {
  for (const auto& f : registry()) {
    if (id == f.id) return f;
  }
  throw Error("unknown test function: " + std::string(id));
}

const std::vector<TestFunction>& benchmark_functions() {
  static const std::vector<TestFunction> fs = {
      test_function("m1"), test_function("m2"), test_function("m3"),
      test_function("m4")};
  return fs;
}

SampleSet generate_sample(const TestFunction& f, const SimConfig& cfg,
                          std::size_t replicate_index) {
  if (cfg.n < 3) throw Error("sample size must be at least 3");
  Stream design(cfg.seed, cfg.fixed_design ? 0 : replicate_index,
                Stream::Purpose::Design);
  std::vector<double> xs(cfg.n);
  for (double& x : xs) x = design.uniform(f.design_lo, f.design_hi);
  std::sort(xs.begin(), xs.end());

  Stream noise(cfg.seed, replicate_index, Stream::Purpose::Noise);
  std::vector<double> ys(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    ys[i] = f.evaluate(xs[i]) + f.noise_sd * noise.normal();
  }
  return SampleSet(std::move(xs), std::move(ys));
}

const LocalStudyRow& LocalStudyReport::optimal_ll() const {
  const LocalStudyRow* best = nullptr;
  for (const auto& row : rows) {
    if (row.method != FitMethod::LocalLinear) continue;
    if (best == nullptr || row.mse < best->mse) best = &row;
  }
  if (best == nullptr) throw Error("report has no LL rows");
  return *best;
}

const LocalStudyRow& LocalStudyReport::optimal_mbc(double h0) const {
  const LocalStudyRow* best = nullptr;
  for (const auto& row : rows) {
    if (row.method != FitMethod::Mbc || row.h0 != h0) continue;
    if (best == nullptr || row.mse < best->mse) best = &row;
  }
  if (best == nullptr) throw Error("report has no MBC rows for that h0");
  return *best;
}

LocalStudyReport local_study(const TestFunction& f, const SimConfig& cfg,
                             const BandwidthGrid& h_grid,
                             const std::vector<double>& h0_list,
                             const BandwidthGrid& h1_grid, double at,
                             unsigned threads) {
  if (cfg.n < 10) throw Error("local study needs n >= 10");
  if (cfg.replications < 2) throw Error("local study needs >= 2 replications");
  if (at < f.design_lo || at > f.design_hi) {
    throw Error("study point must lie inside the design interval");
  }
  for (const double h0 : h0_list) {
    if (!(h0 > 0.0)) throw Error("pilot bandwidths must be positive");
  }

  const std::size_t R = cfg.replications;
  const std::size_t nh = h_grid.values.size();
  const std::size_t nh0 = h0_list.size();
  const std::size_t nh1 = h1_grid.values.size();

  // estimates[row][rep], NaN = degenerate replicate for that row
  std::vector<std::vector<double>> ll_est(nh, std::vector<double>(R, kNaN));
  std::vector<std::vector<double>> mbc_est(nh0 * nh1,
                                           std::vector<double>(R, kNaN));

  parallel_for(R, threads, [&](std::size_t rep) {
    const SampleSet data = generate_sample(f, cfg, rep);
    const double range = data.range();

    for (std::size_t g = 0; g < nh; ++g) {
      const auto pf =
          detail::fit_point(data.xs, data.ys, range, at, h_grid.values[g]);
      if (!pf.degenerate) ll_est[g][rep] = pf.value;
    }

    const double clamp = default_pilot_clamp(data);
    std::vector<double> pilot(data.size());
    for (std::size_t p = 0; p < nh0; ++p) {
      const double h0 = h0_list[p];
      bool ok = true;
      for (std::size_t j = 0; j < data.size() && ok; ++j) {
        const auto pf =
            detail::fit_point(data.xs, data.ys, range, data.xs[j], h0);
        if (pf.degenerate) ok = false;
        pilot[j] = pf.value;
      }
      if (!ok) continue;
      const auto pat = detail::fit_point(data.xs, data.ys, range, at, h0);
      if (pat.degenerate) continue;
      const double shift = ratio_shift(pilot, clamp);
      const RatioSeries ratios =
          detail::shifted_ratios(data.ys, pilot, clamp, shift);
      for (std::size_t g = 0; g < nh1; ++g) {
        const auto alpha = detail::fit_point(data.xs, ratios.values, range, at,
                                             h1_grid.values[g]);
        if (!alpha.degenerate) {
          mbc_est[p * nh1 + g][rep] =
              alpha.value * (pat.value + shift) - shift;
        }
      }
    }
  });

  LocalStudyReport report;
  report.function_id = f.id;
  report.at = at;
  report.n = cfg.n;
  report.replications = R;
  report.seed = cfg.seed;

  const double truth = f.evaluate(at);
  auto push_row = [&](FitMethod method, double h, double h0,
                      const std::vector<double>& est) {
    std::vector<double> kept;
    kept.reserve(R);
    for (const double e : est) {
      if (!std::isnan(e)) kept.push_back(e);
    }
    const std::size_t dropped = R - kept.size();
    if (static_cast<double>(dropped) >= 0.05 * static_cast<double>(R)) {
      throw Error("more than 5% of replicates degenerate in a study row");
    }
    const auto mv = mean_var(kept);
    const double bias = mv.mean - truth;
    report.rows.push_back({method, h, h0, bias * bias, mv.variance,
                           bias * bias + mv.variance, dropped});
  };

  for (std::size_t g = 0; g < nh; ++g) {
    push_row(FitMethod::LocalLinear, h_grid.values[g], kNaN, ll_est[g]);
  }
  for (std::size_t p = 0; p < nh0; ++p) {
    for (std::size_t g = 0; g < nh1; ++g) {
      push_row(FitMethod::Mbc, h1_grid.values[g], h0_list[p],
               mbc_est[p * nh1 + g]);
    }
  }
  return report;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  return (m % 2 == 1) ? values[m / 2]
                      : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t count) {
  if (count < 2 || !(hi > lo)) throw Error("invalid uniform grid");
  std::vector<double> g(count);
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    g[i] = lo + step * static_cast<double>(i);
  }
  g.back() = hi;
  return g;
}

double ise(const FitCurve& fit, const TestFunction& f, double lo, double hi) {
  if (!(hi > lo)) throw Error("invalid ISE interval");
  if (fit.grid.size() < 2) throw GridTooCoarse("fit grid too small");
  if (fit.grid.front() > lo || fit.grid.back() < hi) {
    throw GridTooCoarse("fit grid does not cover the ISE interval");
  }
  std::size_t inside = 0;
  for (const double g : fit.grid) {
    if (g >= lo && g <= hi) ++inside;
  }
  if (inside < 101) {
    throw GridTooCoarse("fewer than 101 fit points inside the ISE interval");
  }

  auto interp = [&](double x) {
    const auto it =
        std::lower_bound(fit.grid.begin(), fit.grid.end(), x);
    const std::size_t j = static_cast<std::size_t>(it - fit.grid.begin());
    if (j < fit.grid.size() && fit.grid[j] == x) return fit.values[j];
    const double x0 = fit.grid[j - 1], x1 = fit.grid[j];
    const double t = (x - x0) / (x1 - x0);
    return fit.values[j - 1] + t * (fit.values[j] - fit.values[j - 1]);
  };

  constexpr std::size_t kQuad = 1001;
  const std::vector<double> qx = uniform_grid(lo, hi, kQuad);
  const double step = (hi - lo) / static_cast<double>(kQuad - 1);
  double acc = 0;
  for (std::size_t i = 0; i < kQuad; ++i) {
    const double e = f.evaluate(qx[i]) - interp(qx[i]);
    const double w = (i == 0 || i == kQuad - 1) ? 0.5 : 1.0;
    acc += w * e * e;
  }
  return acc * step;
}

namespace {

struct RepOutcome {
  bool ok = false;
  GlobalReplicate rec{};
  std::vector<double> ll_curve;   // envelope use
  std::vector<double> mbc_curve;  // envelope use
};

// Shared per-replicate pipeline of the global study and the envelope:
// CV-select both estimators, fit them on eval_grid.
RepOutcome run_replicate(const TestFunction& f, const SimConfig& cfg,
                         std::size_t rep, const BandwidthGrid& grid_ll,
                         const BandwidthGrid& grid0, const BandwidthGrid& grid1,
                         std::span<const double> eval_grid) {
  RepOutcome out;
  const SampleSet data = generate_sample(f, cfg, rep);
  try {
    const CvResult cv_ll = select_ll(data, grid_ll);
    const CvResult cv_mbc = select_mbc(data, grid0, grid1, 1);
    const FitCurve fit_ll =
        local_linear_fit(data, cv_ll.selected.h0, eval_grid);
    const MbcConfig config = MbcConfig::with_default_clamp(
        cv_mbc.selected.h0, *cv_mbc.selected.h1, data);
    const FitCurve fit_mbc = mbc_fit(data, config, eval_grid);

    out.rec.index = rep;
    out.rec.sel_h = cv_ll.selected.h0;
    out.rec.sel_h0 = cv_mbc.selected.h0;
    out.rec.sel_h1 = *cv_mbc.selected.h1;
    out.ll_curve = fit_ll.values;
    out.mbc_curve = fit_mbc.values;
    out.ok = true;
  } catch (const DegenerateDesign&) {
  } catch (const AllDegenerate&) {
  }
  return out;
}

}  // namespace

GlobalStudyReport global_study(const std::vector<TestFunction>& functions,
                               const SimConfig& cfg,
                               const BandwidthGrid& grid_ll,
                               const BandwidthGrid& grid0,
                               const BandwidthGrid& grid1, unsigned threads,
                               const Progress& progress) {
  if (cfg.n < 10) throw Error("global study needs n >= 10");
  if (cfg.replications < 2) {
    throw Error("global study needs >= 2 replications");
  }
  const std::size_t R = cfg.replications;
  const std::vector<double> ise_grid = uniform_grid(0.0, 1.0, 1001);

  GlobalStudyReport report;
  report.n = cfg.n;
  report.replications = R;
  report.seed = cfg.seed;

  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  const std::size_t total = functions.size() * R;

  for (const TestFunction& f : functions) {
    std::vector<RepOutcome> outcomes(R);
    parallel_for(R, threads, [&](std::size_t rep) {
      RepOutcome out =
          run_replicate(f, cfg, rep, grid_ll, grid0, grid1, ise_grid);
      if (out.ok) {
        FitCurve ll_curve, mbc_curve;
        ll_curve.grid = ise_grid;
        ll_curve.values = std::move(out.ll_curve);
        mbc_curve.grid = ise_grid;
        mbc_curve.values = std::move(out.mbc_curve);
        out.rec.ise_ll = ise(ll_curve, f, 0.0, 1.0);
        out.rec.ise_mbc = ise(mbc_curve, f, 0.0, 1.0);
        out.ll_curve.clear();
        out.mbc_curve.clear();
      }
      outcomes[rep] = std::move(out);
      if (progress) {
        const std::size_t d = done.fetch_add(1) + 1;
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(d, total);
      }
    });

    GlobalFunctionReport fr;
    fr.id = f.id;
    std::vector<double> hs, ise_ll, h0s, h1s, ise_mbc;
    for (const auto& out : outcomes) {
      if (!out.ok) continue;
      fr.replicates.push_back(out.rec);
      hs.push_back(out.rec.sel_h);
      ise_ll.push_back(out.rec.ise_ll);
      h0s.push_back(out.rec.sel_h0);
      h1s.push_back(out.rec.sel_h1);
      ise_mbc.push_back(out.rec.ise_mbc);
    }
    fr.dropped = R - fr.replicates.size();
    if (static_cast<double>(fr.dropped) >= 0.05 * static_cast<double>(R)) {
      throw Error("more than 5% of replicates degenerate for " + fr.id);
    }
    fr.med_h = median(hs);
    fr.med_ise_ll = median(ise_ll);
    fr.med_h0 = median(h0s);
    fr.med_h1 = median(h1s);
    fr.med_ise_mbc = median(ise_mbc);
    fr.r_ise = fr.med_ise_ll / fr.med_ise_mbc;
    report.functions.push_back(std::move(fr));
  }
  return report;
}

EnvelopeTable envelope_data(const TestFunction& f, const SimConfig& cfg,
                            std::span<const double> grid,
                            const BandwidthGrid& grid_ll,
                            const BandwidthGrid& grid0,
                            const BandwidthGrid& grid1, unsigned threads,
                            const Progress& progress) {
  if (grid.empty()) throw Error("empty evaluation grid");
  const std::size_t R = cfg.replications;

  std::vector<RepOutcome> outcomes(R);
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  parallel_for(R, threads, [&](std::size_t rep) {
    outcomes[rep] = run_replicate(f, cfg, rep, grid_ll, grid0, grid1, grid);
    if (progress) {
      const std::size_t d = done.fetch_add(1) + 1;
      std::lock_guard<std::mutex> lock(progress_mutex);
      progress(d, R);
    }
  });

  EnvelopeTable table;
  table.function_id = f.id;
  table.grid.assign(grid.begin(), grid.end());
  table.truth.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    table.truth[i] = f.evaluate(grid[i]);
  }

  std::size_t kept = 0;
  for (const auto& out : outcomes) {
    if (out.ok) ++kept;
  }
  table.dropped = R - kept;
  if (kept == 0) throw Error("all envelope replicates degenerate");
  if (static_cast<double>(table.dropped) >= 0.05 * static_cast<double>(R)) {
    throw Error("more than 5% of envelope replicates degenerate");
  }

  const auto summarize = [&](bool mbc, std::vector<double>& mean,
                             std::vector<double>& q25,
                             std::vector<double>& q75) {
    mean.resize(grid.size());
    q25.resize(grid.size());
    q75.resize(grid.size());
    std::vector<double> column;
    column.reserve(kept);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      column.clear();
      for (const auto& out : outcomes) {
        if (!out.ok) continue;
        column.push_back(mbc ? out.mbc_curve[i] : out.ll_curve[i]);
      }
      double acc = 0;
      for (const double v : column) acc += v;
      mean[i] = acc / static_cast<double>(column.size());
      std::sort(column.begin(), column.end());
      q25[i] = quantile_sorted(column, 0.25);
      q75[i] = quantile_sorted(column, 0.75);
    }
  };
  summarize(false, table.ll_mean, table.ll_q25, table.ll_q75);
  summarize(true, table.mbc_mean, table.mbc_q25, table.mbc_q75);
  return table;
}

// ---- report files ----

void write_local_study_csv(const LocalStudyReport& report,
                           const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "method,h,h0,bias2,variance,mse,dropped\n";
  for (const auto& row : report.rows) {
    const bool mbc = row.method == FitMethod::Mbc;
    out << (mbc ? "mbc" : "ll") << ',' << fmt(row.h) << ','
        << (mbc ? fmt(row.h0) : std::string()) << ',' << fmt(row.bias2) << ','
        << fmt(row.variance) << ',' << fmt(row.mse) << ',' << row.dropped
        << '\n';
  }
}

void write_local_study_json(const LocalStudyReport& report,
                            const std::filesystem::path& path) {
  nlohmann::json j;
  j["study"] = "local";
  j["function"] = report.function_id;
  j["at"] = report.at;
  j["n"] = report.n;
  j["replications"] = report.replications;
  j["seed"] = report.seed;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : report.rows) {
    nlohmann::json r;
    r["method"] = row.method == FitMethod::Mbc ? "mbc" : "ll";
    r["h"] = row.h;
    if (row.method == FitMethod::Mbc) r["h0"] = row.h0;
    r["bias2"] = row.bias2;
    r["variance"] = row.variance;
    r["mse"] = row.mse;
    r["dropped"] = row.dropped;
    j["rows"].push_back(std::move(r));
  }
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_global_study_csv(const GlobalStudyReport& report,
                            const std::filesystem::path& summary_path,
                            const std::filesystem::path& replicates_path) {
  {
    auto out = open_out(summary_path);
    out << "function,ll_h,ll_ise,mbc_h0,mbc_h1,mbc_ise,r_ise\n";
    for (const auto& fr : report.functions) {
      out << fr.id << ',' << fmt(fr.med_h) << ',' << fmt(fr.med_ise_ll) << ','
          << fmt(fr.med_h0) << ',' << fmt(fr.med_h1) << ','
          << fmt(fr.med_ise_mbc) << ',' << fmt(fr.r_ise) << '\n';
    }
  }
  {
    auto out = open_out(replicates_path);
    out << "function,replicate,sel_h,ise_ll,sel_h0,sel_h1,ise_mbc\n";
    for (const auto& fr : report.functions) {
      for (const auto& r : fr.replicates) {
        out << fr.id << ',' << r.index << ',' << fmt(r.sel_h) << ','
            << fmt(r.ise_ll) << ',' << fmt(r.sel_h0) << ',' << fmt(r.sel_h1)
            << ',' << fmt(r.ise_mbc) << '\n';
      }
    }
  }
}

void write_global_study_json(const GlobalStudyReport& report,
                             const std::filesystem::path& path) {
  nlohmann::json j;
  j["study"] = "global";
  j["n"] = report.n;
  j["replications"] = report.replications;
  j["seed"] = report.seed;
  j["functions"] = nlohmann::json::array();
  for (const auto& fr : report.functions) {
    nlohmann::json e;
    e["id"] = fr.id;
    e["median"] = {{"h", fr.med_h},
                   {"ise_ll", fr.med_ise_ll},
                   {"h0", fr.med_h0},
                   {"h1", fr.med_h1},
                   {"ise_mbc", fr.med_ise_mbc}};
    e["r_ise"] = fr.r_ise;
    e["dropped"] = fr.dropped;
    e["replicates"] = nlohmann::json::array();
    for (const auto& r : fr.replicates) {
      e["replicates"].push_back({{"index", r.index},
                                 {"sel_h", r.sel_h},
                                 {"ise_ll", r.ise_ll},
                                 {"sel_h0", r.sel_h0},
                                 {"sel_h1", r.sel_h1},
                                 {"ise_mbc", r.ise_mbc}});
    }
    j["functions"].push_back(std::move(e));
  }
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_envelope_csv(const EnvelopeTable& table,
                        const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "x,truth,ll_mean,ll_q25,ll_q75,mbc_mean,mbc_q25,mbc_q75\n";
  for (std::size_t i = 0; i < table.grid.size(); ++i) {
    out << fmt(table.grid[i]) << ',' << fmt(table.truth[i]) << ','
        << fmt(table.ll_mean[i]) << ',' << fmt(table.ll_q25[i]) << ','
        << fmt(table.ll_q75[i]) << ',' << fmt(table.mbc_mean[i]) << ','
        << fmt(table.mbc_q25[i]) << ',' << fmt(table.mbc_q75[i]) << '\n';
  }
}

namespace studies {

LocalStudyReport table1(std::uint64_t seed, unsigned threads) {
  SimConfig cfg;
  cfg.n = 100;
  cfg.replications = 200;
  cfg.seed = seed;
  cfg.fixed_design = true;
  return local_study(test_function("local"), cfg,
                     BandwidthGrid::linear(0.005, 0.040, 36), {0.03, 0.008},
                     BandwidthGrid::linear(0.005, 0.060, 56), 0.0, threads);
}

GlobalStudyReport table2(std::uint64_t seed, unsigned threads,
                         const Progress& progress) {
  SimConfig cfg;
  cfg.n = 100;
  cfg.replications = 100;
  cfg.seed = seed;
  cfg.fixed_design = false;
  const BandwidthGrid grid = BandwidthGrid::log_spaced(0.005, 0.10, 30);
  return global_study(benchmark_functions(), cfg, grid, grid, grid, threads,
                      progress);
}

EnvelopeTable figure4(std::uint64_t seed, unsigned threads,
                      const Progress& progress) {
  SimConfig cfg;
  cfg.n = 100;
  cfg.replications = 100;
  cfg.seed = seed;
  cfg.fixed_design = false;
  const BandwidthGrid grid = BandwidthGrid::log_spaced(0.005, 0.10, 30);
  const std::vector<double> eval = uniform_grid(0.0, 1.0, 201);
  return envelope_data(test_function("m1"), cfg, eval, grid, grid, grid,
                       threads, progress);
}

}  // namespace studies

}  // namespace mbcs
