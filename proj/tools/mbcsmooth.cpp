// mbcsmooth: local linear and multiplicative bias-corrected smoothing of
// binned count spectra, plus the Monte-Carlo study runner.
//
// Exit codes: 0 success, 2 input error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mbcs/simlab.hpp"
#include "mbcs/spectrum.hpp"

namespace fs = std::filesystem;

namespace {

struct SmoothArgs {
  std::string input;
  std::string output;
  std::string range;
  std::string method = "both";
  std::string grid;
  double h = 0;
  double h0 = 0;
  double h1 = 0;
  bool cv = false;
  double ci = 0;
  bool emit_cv_table = false;
};

void parse_range(const std::string& s, long& lo, long& hi) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) {
    throw mbcs::Error("--range expects LO:HI");
  }
  try {
    lo = std::stol(s.substr(0, colon));
    hi = std::stol(s.substr(colon + 1));
  } catch (const std::exception&) {
    throw mbcs::Error("--range expects integer channels LO:HI");
  }
}

mbcs::BandwidthGrid parse_grid(const std::string& s) {
  double lo = 0, hi = 0;
  unsigned long count = 0;
  const auto c1 = s.find(':');
  const auto c2 = s.find(':', c1 == std::string::npos ? 0 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos) {
    throw mbcs::Error("--grid expects LO:HI:COUNT");
  }
  try {
    lo = std::stod(s.substr(0, c1));
    hi = std::stod(s.substr(c1 + 1, c2 - c1 - 1));
    count = std::stoul(s.substr(c2 + 1));
  } catch (const std::exception&) {
    throw mbcs::Error("--grid expects LO:HI:COUNT");
  }
  return mbcs::BandwidthGrid::log_spaced(lo, hi, count);
}

int run_smooth(const SmoothArgs& args) {
  const mbcs::Spectrum spectrum = mbcs::read_spectrum(args.input);

  mbcs::SmoothJob job;
  if (!args.range.empty()) parse_range(args.range, job.range_lo, job.range_hi);
  if (args.method == "ll") {
    job.method = mbcs::SmoothMethod::LocalLinear;
  } else if (args.method == "mbc") {
    job.method = mbcs::SmoothMethod::Mbc;
  } else if (args.method == "both") {
    job.method = mbcs::SmoothMethod::Both;
  } else {
    throw mbcs::Error("--method must be ll, mbc or both");
  }
  job.cv = args.cv;
  if (args.h > 0) job.h = args.h;
  if (args.h0 > 0) job.h0 = args.h0;
  if (args.h1 > 0) job.h1 = args.h1;
  if (!args.grid.empty()) job.grid = parse_grid(args.grid);
  if (args.ci > 0) job.ci_level = args.ci;

  const mbcs::SmoothResult result = mbcs::smooth_spectrum(spectrum, job);
  mbcs::write_results(result, args.output);

  if (result.clamp_engaged > 0) {
    std::cerr << "warning: pilot clamp engaged at " << result.clamp_engaged
              << " channel(s); counts there are near zero\n";
  }
  const int outside = (result.ll ? result.ll->outside_range : 0) +
                      (result.mbc ? result.mbc->outside_range : 0);
  if (outside > 0) {
    std::cerr << "warning: " << outside
              << " evaluation point(s) beyond the data range\n";
  }
  if (result.cv_ll) {
    std::cout << "selected h = " << result.cv_ll->selected.h0 << "\n";
  }
  if (result.cv_mbc) {
    std::cout << "selected (h0, h1) = (" << result.cv_mbc->selected.h0 << ", "
              << *result.cv_mbc->selected.h1 << ")\n";
  }
  if (args.emit_cv_table) {
    fs::path table_path(args.output);
    table_path += ".cv.csv";
    mbcs::write_cv_tables(result, table_path);
    std::cout << "cv table written to " << table_path.string() << "\n";
  }
  std::cout << "wrote " << args.output << "\n";
  return 0;
}

int run_simulate(const std::string& name, const std::string& out_dir,
                 std::uint64_t seed, unsigned threads, bool quiet) {
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  mbcs::Progress progress;
  if (!quiet) {
    progress = [](std::size_t done, std::size_t total) {
      if (done % 10 == 0 || done == total) {
        std::fprintf(stderr, "\r  replicate %zu/%zu", done, total);
        if (done == total) std::fprintf(stderr, "\n");
      }
    };
  }

  if (name == "table1") {
    const auto report = mbcs::studies::table1(seed, threads);
    mbcs::write_local_study_csv(report, dir / "table1_rows.csv");
    mbcs::write_local_study_json(report, dir / "table1.json");
    const auto& ll = report.optimal_ll();
    const auto& mbc = report.optimal_mbc(0.03);
    std::printf("LL  optimal: h=%.4f mse=%.3e bias2=%.3e var=%.3e\n", ll.h,
                ll.mse, ll.bias2, ll.variance);
    std::printf("MBC optimal (h0=0.03): h1=%.4f mse=%.3e bias2=%.3e var=%.3e\n",
                mbc.h, mbc.mse, mbc.bias2, mbc.variance);
  } else if (name == "table2") {
    const auto report = mbcs::studies::table2(seed, threads, progress);
    mbcs::write_global_study_csv(report, dir / "table2_summary.csv",
                                 dir / "table2_replicates.csv");
    mbcs::write_global_study_json(report, dir / "table2.json");
    for (const auto& fr : report.functions) {
      std::printf("%-3s  h=%.3f ise=%.4g | h0=%.3f h1=%.3f ise=%.4g | R=%.3f\n",
                  fr.id.c_str(), fr.med_h, fr.med_ise_ll, fr.med_h0, fr.med_h1,
                  fr.med_ise_mbc, fr.r_ise);
    }
  } else if (name == "figure4") {
    const auto table = mbcs::studies::figure4(seed, threads, progress);
    mbcs::write_envelope_csv(table, dir / "figure4_envelope.csv");
    std::printf("envelope over %zu grid points written\n", table.grid.size());
  } else {
    throw mbcs::Error("unknown study: " + name +
                      " (expected table1, table2 or figure4)");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Local linear and multiplicative bias-corrected regression smoothing "
      "for binned count spectra"};
  app.require_subcommand(1);

  SmoothArgs sargs;
  CLI::App* smooth =
      app.add_subcommand("smooth", "Smooth a channel,count CSV spectrum");
  smooth->set_help_flag("--help", "print help");  // frees -h for --h
  smooth->add_option("--input", sargs.input, "input spectrum CSV")->required();
  smooth->add_option("--output", sargs.output, "output CSV")->required();
  smooth->add_option("--range", sargs.range,
                     "channel range LO:HI, inclusive (default: all)");
  smooth->add_option("--method", sargs.method, "ll, mbc or both");
  smooth->add_option("--h", sargs.h, "LL bandwidth, in channel units");
  smooth->add_option("--h0", sargs.h0, "MBC pilot bandwidth (channels)");
  smooth->add_option("--h1", sargs.h1, "MBC correction bandwidth (channels)");
  smooth->add_flag("--cv", sargs.cv,
                   "select bandwidths by leave-one-out cross-validation");
  smooth->add_option("--grid", sargs.grid,
                     "CV grid LO:HI:COUNT, log-spaced, channel units");
  smooth->add_option("--ci", sargs.ci, "confidence band level, e.g. 0.95");
  smooth->add_flag("--emit-cv-table", sargs.emit_cv_table,
                   "also write <output>.cv.csv with all CV scores");

  std::string study_name, out_dir = ".";
  std::uint64_t seed = mbcs::studies::kDefaultSeed;
  unsigned threads = 0;
  bool quiet = false;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Run a Monte-Carlo study: table1, table2 or figure4");
  simulate->add_option("name", study_name, "study name")->required();
  simulate->add_option("--out-dir", out_dir, "output directory");
  simulate->add_option("--seed", seed, "study seed");
  simulate->add_option("--threads", threads, "worker threads (0 = all cores)");
  simulate->add_flag("--quiet", quiet, "suppress progress output");

  std::string fix_out;
  std::uint64_t fix_seed = 1;
  std::size_t fix_channels = 1024;
  CLI::App* fixture = app.add_subcommand(
      "fixture", "Generate the synthetic multi-peak test spectrum");
  fixture->add_option("--output", fix_out, "output CSV")->required();
  fixture->add_option("--seed", fix_seed, "noise seed");
  fixture->add_option("--channels", fix_channels, "number of channels");

  CLI11_PARSE(app, argc, argv);

  try {
    if (smooth->parsed()) return run_smooth(sargs);
    if (simulate->parsed()) {
      return run_simulate(study_name, out_dir, seed, threads, quiet);
    }
    if (fixture->parsed()) {
      mbcs::write_spectrum(mbcs::synthetic_spectrum(fix_seed, fix_channels),
                           fix_out);
      std::cout << "wrote " << fix_out << "\n";
      return 0;
    }
  } catch (const mbcs::DegenerateDesign& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const mbcs::AllDegenerate& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const mbcs::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
