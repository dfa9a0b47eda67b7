// Acceptance gate: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <json.hpp>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "fine/analysis.hpp"
#include "fine/detector.hpp"
#include "fine/error.hpp"
#include "fine/gmm.hpp"
#include "fine/io.hpp"
#include "fine/linalg.hpp"
#include "fine/noise.hpp"
#include "fine/random.hpp"
#include "fine/synthetic.hpp"
#include "support/oracles.hpp"

using namespace fine;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double limit_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs < limit_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s criterion %d: %s [%s; %.2f s of %.0f s]%s\n", pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs,
              limit_s, in_time ? "" : " (over time limit)");
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// --- criterion 1 -----------------------------------------------------------
Outcome projector_closed_form() {
  std::mt19937_64 gen(2024);
  double worst = 0.0;
  for (std::size_t d : {2u, 8u, 64u}) {
    for (int i = 0; i < 100; ++i) {
      const auto u = oracle::random_unit(d, gen);
      const auto v = oracle::random_unit(d, gen);
      const double ref = oracle::spectral_norm(oracle::projector_difference(u, v));
      worst = std::max(worst, std::abs(projector_distance(u, v) - ref));
    }
  }
  return {worst <= 1e-8, fmt("max |closed form - power iteration| = %.3g over 300 pairs", worst)};
}

// --- criterion 2 -----------------------------------------------------------
Outcome exact_recovery() {
  double worst = 0.0;
  for (double tau : {0.05, 0.25, 0.5, 0.9}) {
    const std::size_t np = 2000;
    const auto nm = static_cast<std::size_t>(tau * np);
    const auto data = generate_lda({.d = 64, .n_clean = np, .n_noisy = nm, .theta = std::numbers::pi / 2, .sigma = 0.0, .seed = 7});
    worst = std::max(worst, empirical_perturbation(data, 7).empirical_perturbation);
  }
  return {worst <= 1e-8, fmt("max perturbation = %.3g for tau in {0.05,0.25,0.5,0.9}", worst)};
}

// --- criterion 3 -----------------------------------------------------------
Outcome bound_trend() {
  const std::size_t d = 64, np = 2000;
  const double sigma = 0.1, theta = std::numbers::pi / 3, delta = 0.05;
  const double taus[] = {0.05, 0.1, 0.25, 0.67};
  double mean[4] = {};
  for (int t = 0; t < 4; ++t) {
    const auto nm = static_cast<std::size_t>(std::llround(taus[t] * np));
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto data = generate_lda({.d = d, .n_clean = np, .n_noisy = nm, .theta = theta, .sigma = sigma, .seed = seed});
      mean[t] += empirical_perturbation(data, seed).empirical_perturbation / 10.0;
    }
  }
  const auto nm0 = static_cast<std::size_t>(std::llround(taus[0] * np));
  const double c = calibrate_constant({np, nm0, theta, sigma, d, delta, 0.0}, mean[0]);
  bool monotone = true, bounded = true;
  nlohmann::ordered_json grid = nlohmann::ordered_json::array();
  std::string detail = "mean/bound:";
  for (int t = 0; t < 4; ++t) {
    if (t > 0 && mean[t] < mean[t - 1]) monotone = false;
    const auto nm = static_cast<std::size_t>(std::llround(taus[t] * np));
    const double b = perturbation_bound({np, nm, theta, sigma, d, delta, c});
    if (!(mean[t] <= b)) bounded = false;
    detail += fmt(" %.4g/%s", mean[t], io::format_double(b).c_str());
    grid.push_back({{"tau", taus[t]}, {"empirical_mean", mean[t]}, {"bound", std::isinf(b) ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(b)}});
  }
  nlohmann::ordered_json manifest = {{"criterion", 3},
                                     {"d", d},
                                     {"n_plus", np},
                                     {"sigma", sigma},
                                     {"theta", theta},
                                     {"delta", delta},
                                     {"seeds", 10},
                                     {"calibration",
                                      {{"rule", "smallest C >= 0 with bound >= 10-seed mean perturbation"},
                                       {"at_tau", taus[0]},
                                       {"constant_c", c}}},
                                     {"grid", grid}};
  const fs::path path = fs::absolute("acceptance_bound_calibration.json");
  io::write_text(path, manifest.dump(2) + "\n");
  return {monotone && bounded, fmt("C=%s, %s; monotone=%d bounded=%d; manifest %s", io::format_double(c).c_str(),
                                   detail.c_str(), monotone, bounded, path.string().c_str())};
}

// --- criterion 4 -----------------------------------------------------------
double detect_f(const NoiseSpec& noise_base, std::uint64_t seed) {
  Dataset ds = generate_multiclass(128, 10, 1000, 0.05, seed).dataset;
  NoiseSpec noise = noise_base;
  noise.num_classes = 10;
  noise.seed = seed + 500;
  ds.observed_labels = inject(ds.observed_labels, noise).observed_labels;
  FineOptions opts;
  opts.seed = seed;
  opts.threads = 0;
  const auto r = fine_select(ds, opts);
  return compute_prf(r.clean_mask, ds.clean_mask()).f_score;
}

Outcome detector_quality() {
  double sym = 0.0, circ = 0.0;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    sym += detect_f({.kind = NoiseKind::symmetric, .rate = 0.2}, s) / 5;
    circ += detect_f({.kind = NoiseKind::asymmetric_circular, .rate = 0.4, .superclass_size = 5}, s) / 5;
  }
  return {sym >= 0.95 && circ >= 0.90, fmt("mean F symmetric-20%% = %.4f (>= 0.95), circular-40%% = %.4f (>= 0.90)", sym, circ)};
}

// --- criterion 5 -----------------------------------------------------------
Outcome scalability() {
  const Dataset ds = generate_multiclass(128, 10, 5000, 0.1, 5).dataset;
  FineOptions opts;
  opts.seed = 5;
  opts.threads = 0;
  const std::vector<double> fractions{0.1};
  const auto t = subsample_similarity(ds, fractions, 10, opts);
  const double m = t.rows.front().mean_abs_cos;
  return {m >= 0.99, fmt("N=%zu, fraction 0.1: mean |cos| = %.6f over 10 trials", ds.size(), m)};
}

// --- criterion 6 -----------------------------------------------------------
std::vector<double> mixture(std::size_t n, double w, double m1, double s1, double m2, double s2, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::bernoulli_distribution pick(w);
  std::normal_distribution<double> a(m1, s1), b(m2, s2);
  std::vector<double> x(n);
  for (auto& xi : x) xi = pick(gen) ? b(gen) : a(gen);
  return x;
}

Outcome gmm_correctness() {
  std::mt19937_64 gen(99);
  std::uniform_int_distribution<int> size(2, 400);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = mixture(static_cast<std::size_t>(size(gen)), u(gen), u(gen), 0.01 + u(gen), 3 * u(gen), 0.01 + u(gen), gen());
    const GmmFit f = fit_gmm2(x);
    for (std::size_t k = 1; k < f.loglik_trace.size(); ++k)
      if (f.loglik_trace[k] < f.loglik_trace[k - 1] - 1e-9) {
        ++bad;
        break;
      }
  }
  const GmmFit small = fit_gmm2(std::vector<double>{0.00, 0.01, 0.02, 1.00, 1.01});
  const bool small_ok = std::abs(small.mean_low - 0.01) <= 1e-3 && std::abs(small.mean_high - 1.005) <= 1e-3;
  const GmmFit big = fit_gmm2(mixture(10000, 0.5, 0.0, 0.01, 1.0, 0.01, 3));
  const bool big_ok = std::abs(big.mean_low) <= 0.01 && std::abs(big.mean_high - 1.0) <= 0.01 &&
                      std::abs(big.weight_high - 0.5) <= 0.05;
  const GmmFit flat = fit_gmm2(std::vector<double>(50, 0.7));
  const bool flat_ok = flat.degenerate && clean_posterior(flat, 0.7) == 1.0 && clean_posterior(flat, -3.0) == 1.0;
  return {bad == 0 && small_ok && big_ok && flat_ok,
          fmt("non-monotone traces %d/1000; 5-point means %.4f/%.4f; 10k means %.4f/%.4f w=%.3f; degenerate ok=%d", bad,
              small.mean_low, small.mean_high, big.mean_low, big.mean_high, big.weight_high, flat_ok)};
}

// --- criterion 7 -----------------------------------------------------------
Outcome pr_bounds() {
  const std::size_t n = 100000;
  std::string detail = "C=0 trials with both rates >= bounds:";
  std::string slack = "; diagnostic C=1,delta=0.05:";
  bool pass = true;
  for (double ratio : {1.0, 2.0, 4.0}) {
    const auto lb0 = pr_lower_bounds({.delta_gap = ratio, .sigma = 1.0, .n_plus = n, .n_minus = n, .constant_c = 0.0});
    const auto lb1 = pr_lower_bounds({.delta_gap = ratio, .sigma = 1.0, .n_plus = n, .n_minus = n, .constant_c = 1.0});
    int ok0 = 0, ok1 = 0;
    for (std::uint64_t t = 0; t < 100; ++t) {
      const auto s = simulate_midpoint_rule(ratio, 1.0, n, n, stream_seed(static_cast<std::uint64_t>(ratio * 10), t));
      ok0 += s.recall >= lb0.recall_lb && s.precision >= lb0.precision_lb;
      ok1 += s.recall >= lb1.recall_lb && s.precision >= lb1.precision_lb;
    }
    if (ok0 < 95) pass = false;
    detail += fmt(" D/s=%g:%d/100", ratio, ok0);
    slack += fmt(" %d/100", ok1);
  }
  return {pass, detail + slack};
}

// --- criterion 8 -----------------------------------------------------------
Outcome heatmap_claim() {
  const auto data = generate_lda({.d = 64, .n_clean = 2000, .n_noisy = 500, .theta = std::numbers::pi / 2, .sigma = 0.05, .seed = 8});
  const auto u = empirical_perturbation(data, 8).u;
  double worst = 0.0;
  for (std::uint64_t plane = 0; plane < 10; ++plane) {
    const auto pts = hyperplane_heatmap(data.features, data.true_mask, u, {.resolution = 360, .seed = plane});
    double mx = -INFINITY;
    for (const auto& p : pts) mx = std::max(mx, p.value);
    worst = std::max(worst, (mx - pts.front().value) / std::abs(mx));
  }
  return {worst <= 0.02, fmt("max relative gap (grid max - value at u) = %.3g over 10 planes", worst)};
}

// --- criterion 9 -----------------------------------------------------------
Outcome noise_exactness() {
  std::vector<Label> labels(10000);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<Label>(i % 10);
  const auto sym = inject(labels, {.kind = NoiseKind::symmetric, .rate = 0.2, .num_classes = 10, .seed = 1});
  bool ok = sym.corrupted_count() == 2000;
  for (std::size_t i = 0; i < labels.size(); ++i) ok = ok && (sym.corrupted_mask[i] == (sym.observed_labels[i] != labels[i]));

  const auto mapping = cifar10_asymmetric_mapping();
  const auto pairs = inject(labels, {.kind = NoiseKind::asymmetric_pairs, .rate = 0.4, .num_classes = 10, .mapping = mapping, .seed = 2});
  std::vector<int> flipped(10, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!pairs.corrupted_mask[i]) {
      ok = ok && pairs.observed_labels[i] == labels[i];
      continue;
    }
    ++flipped[labels[i]];
    Label want = labels[i];
    for (const auto& [from, to] : mapping)
      if (from == labels[i]) want = to;
    ok = ok && pairs.observed_labels[i] == want && want != labels[i];
  }
  for (Label c = 0; c < 10; ++c) {
    const bool mapped = std::any_of(mapping.begin(), mapping.end(), [&](const auto& p) { return p.first == c; });
    ok = ok && flipped[c] == (mapped ? 400 : 0);
  }

  std::vector<Label> fine100(50000);
  for (std::size_t i = 0; i < fine100.size(); ++i) fine100[i] = static_cast<Label>(i % 100);
  const auto circ = inject(fine100, {.kind = NoiseKind::asymmetric_circular, .rate = 0.4, .num_classes = 100, .superclass_size = 5, .seed = 3});
  std::vector<int> moved(100, 0);
  for (std::size_t i = 0; i < fine100.size(); ++i) {
    if (!circ.corrupted_mask[i]) continue;
    const Label c = fine100[i];
    const Label want = (c % 5 == 4) ? c - 4 : c + 1;
    ok = ok && circ.observed_labels[i] == want;
    ++moved[c];
  }
  for (int m : moved) ok = ok && m == 200;
  ok = ok && circular_target(4, 5) == 0 && circular_target(7, 5) == 8;
  return {ok, fmt("symmetric %zu/10000; pair flips per source class 400; circular 200 per class over 100 classes", sym.corrupted_count())};
}

// --- criterion 10 ----------------------------------------------------------
int cli(const std::string& args) {
  const std::string cmd = std::string(FINE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism_and_format() {
  const fs::path dir = fs::temp_directory_path() / ("fine_acceptance_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  const auto p = [&](const std::string& name) { return (dir / name).string(); };
  std::vector<std::string> problems;
  auto expect = [&](bool cond, const std::string& what) {
    if (!cond) problems.push_back(what);
  };

  expect(cli("synth --multiclass --k 10 --per-class-n 300 --d 32 --sigma 0.1 --output " + p("m.fine")) == 0, "synth");
  expect(cli("synth --multiclass --k 10 --per-class-n 300 --d 32 --sigma 0.1 --output " + p("m2.fine")) == 0, "synth");
  expect(slurp(p("m.fine")) == slurp(p("m2.fine")), "synth repeat differs");
  for (int rep = 0; rep < 2; ++rep) {
    expect(cli("inject --in " + p("m.fine") + " --kind asymmetric-pairs --rate 0.4 --output " + p("n" + std::to_string(rep) + ".fine")) == 0,
           "inject");
  }
  expect(slurp(p("n0.fine")) == slurp(p("n1.fine")) && slurp(p("n0.fine.mask.csv")) == slurp(p("n1.fine.mask.csv")),
         "inject repeat differs");

  const std::vector<std::pair<std::string, std::string>> cmds = {
      {"detect --in " + p("n0.fine") + " --rounds 3", "bin"},
      {"detect --in " + p("n0.fine") + " --subsample 0.3 --score-scope prev-clean --rounds 2", "bin"},
      {"analyze bound-sweep --tau 0.05:0.25:0.1 --trials 2 --d 16 --n-plus 400", "csv"},
      {"analyze pr-bounds --trials 3 --n-plus 5000 --n-minus 5000", "csv"},
      {"analyze heatmap --in " + p("n0.fine") + " --class 1", "csv"},
      {"analyze subsample-sim --in " + p("n0.fine") + " --fractions 0.1,1 --trials 3", "csv"},
  };
  int k = 0;
  for (const auto& [cmd, ext] : cmds) {
    std::string first, first_metrics;
    for (const char* threads : {"1", "1", "4", "0"}) {
      const std::string out = p("o" + std::to_string(k++) + "." + ext);
      expect(cli(cmd + " --threads " + threads + " --output " + out) == 0, "run failed: " + cmd);
      const std::string bytes = slurp(out);
      if (first.empty()) first = bytes;
      expect(!bytes.empty() && bytes == first, "output differs across runs/threads: " + cmd);
      if (fs::exists(out + ".metrics.json")) {
        const std::string m = slurp(out + ".metrics.json");
        if (first_metrics.empty()) first_metrics = m;
        expect(m == first_metrics, "metrics differ: " + cmd);
      }
    }
  }
  expect(cli("replay " + p("o0.bin.manifest.json") + " --output " + p("replayed.bin")) == 0, "replay failed");
  expect(slurp(p("replayed.bin")) == slurp(p("o0.bin")), "replay output differs");

  // feature-file round trip
  const Dataset ds = io::read_features(p("n0.fine"));
  io::write_features(ds, p("rt.fine"));
  expect(slurp(p("rt.fine")) == slurp(p("n0.fine")), "feature file rewrite not byte-identical");
  Dataset narrow = ds;
  for (auto& x : narrow.features) x = static_cast<double>(static_cast<float>(x));
  expect(io::read_features(p("rt.fine")) == narrow, "feature round trip not bit-exact");

  // header corruption: magic, version, n, d, flags
  const auto good = io::encode_features(ds);
  int accepted = 0, tried = 0;
  for (std::size_t pos : {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 19, 20}) {
    for (int x = 1; x < 256; ++x) {
      auto bad = good;
      bad[pos] ^= static_cast<std::uint8_t>(x);
      ++tried;
      try {
        (void)io::decode_features(bad);
        ++accepted;
      } catch (const Error&) {
      }
    }
  }
  expect(accepted == 0, fmt("%d corrupted headers accepted", accepted));
  auto truncated = good;
  truncated.resize(truncated.size() - 3);
  io::write_file(p("trunc.fine"), truncated);
  expect(cli("detect --in " + p("trunc.fine") + " --output " + p("t.bin")) == 1, "truncated file not rejected by CLI");

  fs::remove_all(dir);
  std::string detail = fmt("%zu CLI configurations x 4 runs, replay, round trip, %d header mutations", cmds.size(), tried);
  for (const auto& s : problems) detail += "; " + s;
  return {problems.empty(), detail};
}

}  // namespace

int main() {
  criterion(1, "projector-distance closed form", 5, projector_closed_form);
  criterion(2, "exact recovery at sigma=0, theta=pi/2", 1, exact_recovery);
  criterion(3, "perturbation trend under calibrated bound", 30, bound_trend);
  criterion(4, "detector F-score on multiclass synthetic", 60, detector_quality);
  criterion(5, "subsampled eigenvector agreement", 60, scalability);
  criterion(6, "GMM EM monotonicity and recovery", 30, gmm_correctness);
  criterion(7, "precision/recall lower bounds (C=0) by Monte-Carlo", 60, pr_bounds);
  criterion(8, "heatmap value at u near the maximum", 10, heatmap_claim);
  criterion(9, "noise-injection exactness", 5, noise_exactness);
  criterion(10, "CLI determinism and file format", 10, determinism_and_format);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
