// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.
//
//   xbar_acceptance [--only 1,5,9] [--threads N]
//
// Every criterion runs once with one worker and produces a report string.
// Criterion 9 reruns the selected criteria with N workers (default 3) and
// compares the reports byte for byte.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "xbar/circuit_sim.hpp"
#include "xbar/conv_mapper.hpp"
#include "xbar/layer_experiment.hpp"
#include "xbar/metrics.hpp"
#include "xbar/netrunner.hpp"
#include "xbar/network_model.hpp"
#include "xbar/parallel.hpp"
#include "xbar/random.hpp"
#include "xbar/report_io.hpp"
#include "xbar/resnet20.hpp"

namespace {

using namespace xbar;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
  std::string report;  // deterministic bytes compared by criterion 9
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ConductanceMatrix random_g(const CrossbarConfig& c, Rng& rng) {
  ConductanceMatrix g(c.rows, c.cols, c.g_min);
  for (double& v : g.g.data()) v = rng.uniform(c.g_min, c.g_max);
  return g;
}

Vector random_v(std::size_t n, const CrossbarConfig& c, Rng& rng) {
  Vector v(n);
  for (double& x : v) x = rng.uniform(0.0, c.v_sense_max);
  return v;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// ---------------------------------------------------------------------------

Outcome oracle_equivalence(std::size_t) {
  const double r_wires[] = {0.0, 0.5, 1.0, 5.0};
  Rng rng(101);
  double worst = 0.0;
  std::string report;
  for (int k = 0; k < 200; ++k) {
    CrossbarConfig c = CrossbarConfig::defaults(1 + rng.below(8), 1 + rng.below(8));
    c.r_wire = r_wires[k % 4];
    const ConductanceMatrix g = random_g(c, rng);
    const Vector v = random_v(c.rows, c, rng);
    const NodeSolution fast = simulate(c, g, v);
    const NodeSolution ref = oracle_solve(c, g, v);
    for (std::size_t j = 0; j < c.cols; ++j) {
      worst = std::max(worst, rel(fast.i_out[j], ref.i_out[j]));
      report += format_double(fast.i_out[j]) + ' ';
    }
    report += '\n';
  }
  return {worst <= 1e-9, "max rel diff " + fmt("%.3g", worst) + " (<= 1e-9)", report};
}

Outcome ideal_limit(std::size_t) {
  Rng rng(202);
  double worst = 0.0;
  std::string report;
  for (int k = 0; k < 100; ++k) {
    const CrossbarConfig c = CrossbarConfig::ideal(1 + rng.below(576), 1 + rng.below(64));
    const ConductanceMatrix g = random_g(c, rng);
    const Vector v = random_v(c.rows, c, rng);
    const Vector i = simulate(c, g, v).i_out;
    const Vector ideal = ideal_vmm(v, g);
    for (std::size_t j = 0; j < c.cols; ++j) {
      worst = std::max(worst, rel(i[j], ideal[j]));
      report += format_double(i[j]) + ' ';
    }
    report += '\n';
  }
  return {worst <= 1e-9, "max rel diff " + fmt("%.3g", worst) + " (<= 1e-9)", report};
}

Outcome mapping_table(std::size_t) {
  const std::vector<MappingTableRow> expected = {
      {"Conv0", "3*3*3*16", "27*16", 1024},      {"Conv1-2", "3*3*16*16", "144*16", 1024},
      {"Sum1", "1*1*16*16", "16*16", 1024},      {"Conv3-6", "3*3*16*16", "144*16", 1024},
      {"Sum2", "1*1*16*32", "16*32", 256},       {"Conv7", "3*3*16*32", "144*32", 256},
      {"Conv8-12", "3*3*32*32", "288*32", 256},  {"Sum3", "1*1*32*64", "32*64", 64},
      {"Conv13", "3*3*32*64", "288*64", 64},     {"Conv14-18", "3*3*64*64", "576*64", 64},
      {"FC", "1*1*64*10", "64*10", 1},
  };
  const auto rows = resnet20_mapping_table();
  const auto geometry = resnet20_geometry();
  const std::size_t total = iteration_count(geometry).total;

  bool rows_match = rows.size() == expected.size();
  std::string report;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    report += rows[k].name + ',' + rows[k].kernel + ',' + rows[k].crossbar + ',' +
              std::to_string(rows[k].iterations) + '\n';
    if (k < expected.size())
      rows_match = rows_match && rows[k].name == expected[k].name &&
                   rows[k].kernel == expected[k].kernel &&
                   rows[k].crossbar == expected[k].crossbar &&
                   rows[k].iterations == expected[k].iterations;
  }
  // unrolled shapes from the geometry itself
  bool shapes_match = true;
  for (const auto& l : geometry) {
    const Matrix u = unroll_kernel([&] {
      ConvSpec s = l.spec;
      s.weights = Kernel4(s.kernel_h, s.kernel_w, s.in_channels, s.out_channels, 1.0);
      return s;
    }());
    shapes_match = shapes_match && u.rows() == l.spec.unrolled_rows() &&
                   u.cols() == l.spec.out_channels;
  }
  report += "total," + std::to_string(total) + '\n';
  return {rows_match && shapes_match && total == 9089,
          std::to_string(rows.size()) + " rows " + (rows_match ? "match" : "DIFFER") +
              ", unrolled shapes " + (shapes_match ? "match" : "DIFFER") +
              ", sequential total " + std::to_string(total) + " (== 9089)",
          report};
}

Outcome signal_ordering(std::size_t threads) {
  // Strictly lower means beyond the numerical resolution of the conversion,
  // so amplitude ties caused only by rounding do not count as wins.
  constexpr double kResolution = 1e-9;
  bool pass = true;
  std::string detail, report;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    LayerExpOptions o;
    o.rows = 144;
    o.cols = 16;
    o.kernel_type = KernelType::Gaussian;
    o.sparsity = 0.5;
    o.seed = seed;
    o.variants = {};
    o.amplitude_sweep = true;
    o.amplitudes = {1.0, 0.1, 0.001};
    o.threads = threads;
    const LayerExpResult r = run_layer_experiment(o);
    std::map<double, double> mean;
    for (const auto& v : r.variants) mean[v.amplitude] = v.stats.mean;
    const double m1 = mean.at(1.0), m01 = mean.at(0.1), m0001 = mean.at(0.001);
    const bool ok = m01 < m1 * (1 - kResolution) && m01 < m0001 * (1 - kResolution);
    pass = pass && ok;
    detail += "seed " + std::to_string(seed) + ": 1.0 " + fmt("%.6e", m1) + ", 0.1 " +
              fmt("%.6e", m01) + ", 0.001 " + fmt("%.6e", m0001) + (ok ? "" : " (not ordered)") +
              (seed < 3 ? "; " : "");
    report += variants_csv(r);
  }
  return {pass, detail, report};
}

Outcome improved_vs_original(std::size_t threads) {
  bool pass = true;
  std::string detail, report;
  std::size_t cells = 0, ok_cells = 0;
  double worst_ratio = 0.0;
  for (int type = 1; type <= 3; ++type)
    for (double sparsity : {0.1, 0.5, 0.9}) {
      LayerExpOptions o;
      o.rows = 288;
      o.cols = 32;
      o.kernel_type = kernel_type_from_int(type);
      o.sparsity = sparsity;
      o.seed = 7;
      o.variants = {LayerVariant::Direct, LayerVariant::Uncalibrated, LayerVariant::Improved};
      o.threads = threads;
      const LayerExpResult r = run_layer_experiment(o);
      std::map<std::string, double> mean;
      for (const auto& v : r.variants) mean[v.variant] = v.stats.mean;
      const double imp = mean.at("improved");
      const bool ok = imp < mean.at("direct") && imp < mean.at("uncalibrated");
      ++cells;
      ok_cells += ok;
      pass = pass && ok;
      worst_ratio = std::max(worst_ratio, imp / mean.at("direct"));
      if (!ok)
        detail += "type " + std::to_string(type) + " sparsity " + fmt("%.1f", sparsity) +
                  " not improved; ";
      report += variants_csv(r);
    }
  detail += std::to_string(ok_cells) + "/" + std::to_string(cells) +
            " cells improved, worst improved/direct ratio " + fmt("%.3g", worst_ratio);
  return {pass, detail, report};
}

Outcome headline_accuracy(std::size_t threads) {
  LayerExpOptions o;
  o.rows = 576;
  o.cols = 64;
  o.kernel_type = KernelType::Gaussian;
  o.sparsity = 0.5;
  o.seed = 11;
  o.variants = {LayerVariant::Improved};
  o.threads = threads;
  const LayerExpResult r = run_layer_experiment(o);
  const RelErrorStats& s = r.variants.front().stats;
  const bool pass = s.mean <= 0.005 && s.worst <= 0.025;
  return {pass,
          "mean " + fmt("%.3e", s.mean) + " (<= 5e-3), worst " + fmt("%.3e", s.worst) +
              " (<= 2.5e-2), " + bit_accuracy_label(s.mean) + " bits",
          variants_csv(r) + histogram_csv(r)};
}

Outcome quantization_formulas(std::size_t) {
  const double a = bit_accuracy(0.0025), b = bit_accuracy(0.012);
  const bool pass = a >= 8.6 && a <= 8.7 && b >= 6.3 && b <= 6.5;
  return {pass,
          "bit_accuracy(0.0025) = " + fmt("%.4f", a) + " in [8.6, 8.7], bit_accuracy(0.012) = " +
              fmt("%.4f", b) + " in [6.3, 6.5]",
          format_double(a) + ',' + format_double(b) + '\n'};
}

Outcome quantization_monotonicity(std::size_t threads) {
  const NetworkModel model = make_tiny_model(8, 8, 3, 8, 10, KernelType::Gaussian, 21);
  std::vector<FeatureMap> images;
  for (std::uint64_t k = 0; k < 20; ++k) images.push_back(gen_input(8, 8, 3, 0.3, derive_seed(22, k)));
  NetSettings s;
  s.threads = threads;
  s.seed = 23;
  const SweepResult r = quantization_sweep(model, images, {}, {8, 6, 4}, {}, s);
  const double e8 = r.rows[0].final_mean, e6 = r.rows[1].final_mean, e4 = r.rows[2].final_mean;
  const double agree8 = r.rows[0].agreement;
  const bool pass = e4 > e6 && e6 > e8 && agree8 >= 0.95;
  std::string report = sweep_csv(r);
  for (const auto& row : r.rows) report += error_rows_csv(row.report.rows);
  return {pass,
          "final-layer mean error 4-bit " + fmt("%.4g", e4) + " > 6-bit " + fmt("%.4g", e6) +
              " > 8-bit " + fmt("%.4g", e8) + "; 8-bit agreement " + fmt("%.2f", agree8) +
              " (>= 0.95)",
          report};
}

struct Criterion {
  int id;
  const char* name;
  double time_limit;  // seconds, 0 = none
  std::function<Outcome(std::size_t)> run;
};

std::set<int> parse_only(const std::string& text) {
  std::set<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.insert(std::stoi(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  std::size_t threads_b = 3;
  for (int k = 1; k < argc; ++k) {
    const std::string arg = argv[k];
    if (arg == "--only" && k + 1 < argc) only = parse_only(argv[++k]);
    else if (arg == "--threads" && k + 1 < argc) threads_b = std::stoul(argv[++k]);
    else {
      std::fprintf(stderr, "usage: xbar_acceptance [--only 1,2,...] [--threads N]\n");
      return 1;
    }
  }
  const auto selected = [&](int id) { return only.empty() || only.count(id); };

  const std::vector<Criterion> criteria = {
      {1, "oracle equivalence", 10, oracle_equivalence},
      {2, "ideal-limit identity", 60, ideal_limit},
      {3, "mapping table", 0, mapping_table},
      {4, "conversion-signal ordering", 300, signal_ordering},
      {5, "improved vs direct and uncalibrated", 900, improved_vs_original},
      {6, "headline accuracy 576x64", 600, headline_accuracy},
      {7, "quantization formulas", 0, quantization_formulas},
      {8, "quantization monotonicity", 600, quantization_monotonicity},
  };

  int failures = 0;
  std::map<int, std::string> reports;
  set_default_threads(1);
  for (const auto& c : criteria) {
    if (!selected(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run(1);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what(), ""};
    }
    const double secs = seconds_since(t0);
    const bool in_time = c.time_limit == 0 || secs < c.time_limit;
    const bool pass = o.pass && in_time;
    failures += !pass;
    reports[c.id] = o.report;
    std::string timing = fmt("%.1f s", secs);
    if (c.time_limit > 0) timing += fmt(" (< %.0f s)", c.time_limit);
    std::printf("%s  %d %s: %s; %s\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
  }

  if (selected(9)) {
    set_default_threads(threads_b);
    std::vector<int> differing;
    std::size_t compared = 0;
    for (const auto& c : criteria) {
      if (!reports.count(c.id)) continue;
      Outcome o;
      try {
        o = c.run(threads_b);
      } catch (const std::exception& e) {
        o = {false, e.what(), "<exception>"};
      }
      ++compared;
      if (o.report != reports[c.id] || reports[c.id].empty()) differing.push_back(c.id);
    }
    const bool pass = compared > 0 && differing.empty();
    failures += !pass;
    std::string detail = std::to_string(compared) + " criterion reports compared at 1 vs " +
                         std::to_string(threads_b) + " threads";
    if (!differing.empty()) {
      detail += ", differing:";
      for (int id : differing) detail += ' ' + std::to_string(id);
    } else if (compared > 0) {
      detail += ", all byte-identical";
    }
    std::printf("%s  9 determinism: %s\n", pass ? "PASS" : "FAIL", detail.c_str());
  }
  return failures == 0 ? 0 : 1;
}
