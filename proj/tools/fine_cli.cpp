#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fine/analysis.hpp"
#include "fine/detector.hpp"
#include "fine/error.hpp"
#include "fine/io.hpp"
#include "fine/linalg.hpp"
#include "fine/noise.hpp"
#include "fine/parallel.hpp"
#include "fine/random.hpp"
#include "fine/synthetic.hpp"
#include "fine/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace fine;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Global {
  std::uint64_t seed = 42;
  unsigned threads = 0;
  std::string output;
};

double parse_number(std::string_view text, std::string_view flag) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw UsageError(std::string(flag) + ": '" + std::string(text) + "' is not a finite number");
  }
  return v;
}

// "x", "a,b,c" or "start:stop:step".
std::vector<double> parse_sweep(const std::string& text, std::string_view flag) {
  std::vector<std::string_view> parts;
  const char sep = text.find(':') != std::string::npos ? ':' : ',';
  std::string_view rest = text;
  while (true) {
    const auto pos = rest.find(sep);
    parts.push_back(rest.substr(0, pos));
    if (pos == std::string_view::npos) break;
    rest.remove_prefix(pos + 1);
  }
  std::vector<double> values;
  if (sep == ':') {
    if (parts.size() != 3) throw UsageError(std::string(flag) + ": sweep must be start:stop:step");
    const double start = parse_number(parts[0], flag), stop = parse_number(parts[1], flag),
                 step = parse_number(parts[2], flag);
    if (!(step > 0.0) || stop < start) throw UsageError(std::string(flag) + ": need step > 0 and stop >= start");
    const double span = (stop - start) / step;
    if (span > 1e6) throw UsageError(std::string(flag) + ": sweep has too many points");
    const auto count = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) values.push_back(start + static_cast<double>(i) * step);
  } else {
    for (auto p : parts) values.push_back(parse_number(p, flag));
  }
  return values;
}

std::vector<std::string> strip_output(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--output") {
      ++i;
      continue;
    }
    if (args[i].rfind("--output=", 0) == 0) continue;
    out.push_back(args[i]);
  }
  return out;
}

fs::path sibling(const fs::path& output, std::string_view suffix) { return fs::path(output.string() + std::string(suffix)); }

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

json metrics_json(const Metrics& m) {
  return {{"tp", m.tp},
          {"fp", m.fp},
          {"fn", m.fn},
          {"tn", m.tn},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f_score", m.f_score},
          {"precision_undefined", m.precision_undefined},
          {"recall_undefined", m.recall_undefined}};
}

void check_unit_interval(double v, const char* flag, bool open_low) {
  if (!(v <= 1.0) || (open_low ? !(v > 0.0) : !(v >= 0.0))) {
    throw UsageError(std::string(flag) + " must lie in " + (open_low ? "(0, 1]" : "[0, 1]"));
  }
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::size_t d = 2;
  std::size_t n_clean = 100;
  std::size_t n_noisy = 0;
  double theta = std::numbers::pi / 2;
  double sigma = 0.0;
  bool multiclass = false;
  std::size_t k = 10;
  std::size_t per_class_n = 100;
};

std::vector<fs::path> run_synth(const SynthArgs& a, const Global& g, const fs::path& out, json& params) {
  if (a.d == 0) throw UsageError("--d must be positive");
  if (!(a.sigma >= 0.0)) throw UsageError("--sigma must be >= 0");
  Dataset ds;
  if (a.multiclass) {
    if (a.k < 2 || a.per_class_n == 0) throw UsageError("--multiclass needs --k >= 2 and --per-class-n >= 1");
    ds = generate_multiclass(a.d, a.k, a.per_class_n, a.sigma, g.seed).dataset;
    params = {{"mode", "multiclass"}, {"d", a.d}, {"k", a.k}, {"per_class_n", a.per_class_n}, {"sigma", a.sigma}};
  } else {
    if (a.n_clean == 0) throw UsageError("--n-clean must be positive");
    ds = generate_lda({.d = a.d, .n_clean = a.n_clean, .n_noisy = a.n_noisy, .theta = a.theta, .sigma = a.sigma, .seed = g.seed})
             .to_dataset();
    params = {{"mode", "binary"},    {"d", a.d},         {"n_clean", a.n_clean},
              {"n_noisy", a.n_noisy}, {"theta", a.theta}, {"sigma", a.sigma}};
  }
  io::write_features(ds, out);
  params["n"] = ds.size();
  return {out};
}

struct InjectArgs {
  std::string in;
  std::string kind = "symmetric";
  double rate = 0.0;
  std::string mapping;
  std::size_t superclass_size = 0;
  bool include_true = false;
};

std::vector<fs::path> run_inject(const InjectArgs& a, const Global& g, const fs::path& out, json& params) {
  check_unit_interval(a.rate, "--rate", false);
  const Dataset in = io::read_features(a.in);
  NoiseSpec spec;
  spec.kind = parse_noise_kind(a.kind);
  spec.rate = a.rate;
  spec.num_classes = in.num_classes;
  spec.include_true_class = a.include_true;
  spec.seed = g.seed;
  if (spec.kind == NoiseKind::asymmetric_pairs) {
    if (!a.mapping.empty()) {
      try {
        spec.mapping = parse_mapping(a.mapping);
      } catch (const Error& e) {
        throw UsageError(std::string("--mapping: ") + e.what());
      }
    } else if (in.num_classes == 10) {
      spec.mapping = cifar10_asymmetric_mapping();
    } else {
      throw UsageError("--mapping is required unless the dataset has 10 classes");
    }
  }
  if (a.superclass_size > 0) spec.superclass_size = a.superclass_size;

  const CorruptionResult r = inject(in.observed_labels, spec);
  Dataset outds = in;
  outds.true_labels = in.true_labels ? *in.true_labels : in.observed_labels;
  outds.observed_labels = r.observed_labels;
  io::write_features(outds, out);

  const fs::path mask = sibling(out, ".mask.csv");
  std::ostringstream text;
  text << "index,corrupted,original_label,observed_label\n";
  for (std::size_t i = 0; i < r.corrupted_mask.size(); ++i) {
    text << i << ',' << (r.corrupted_mask[i] ? 1 : 0) << ',' << in.observed_labels[i] << ',' << r.observed_labels[i]
         << '\n';
  }
  io::write_text(mask, text.str());

  params = {{"in", a.in},
            {"kind", a.kind},
            {"rate", a.rate},
            {"num_classes", in.num_classes},
            {"include_true", a.include_true},
            {"corrupted_count", r.corrupted_count()}};
  if (spec.kind == NoiseKind::asymmetric_pairs) {
    json m = json::array();
    for (const auto& [from, to] : spec.mapping) m.push_back({from, to});
    params["mapping"] = m;
  }
  if (spec.superclass_size) params["superclass_size"] = *spec.superclass_size;
  return {out, mask};
}

struct DetectArgs {
  std::string in;
  double zeta = 0.5;
  int rounds = 1;
  double subsample = 1.0;
  std::string score_scope = "all";
  std::string gmm_scope = "per-class";
};

std::vector<fs::path> run_detect(const DetectArgs& a, const Global& g, const fs::path& out, json& params) {
  check_unit_interval(a.zeta, "--zeta", false);
  check_unit_interval(a.subsample, "--subsample", true);
  if (a.rounds < 1) throw UsageError("--rounds must be >= 1");
  const Dataset ds = io::read_features(a.in);
  FineOptions opts;
  opts.zeta = a.zeta;
  opts.subsample_fraction = a.subsample;
  opts.seed = g.seed;
  opts.threads = g.threads;
  opts.score_scope = a.score_scope == "prev-clean" ? ScoreScope::prev_clean : ScoreScope::all;
  opts.gmm_scope = a.gmm_scope == "global" ? GmmScope::global : GmmScope::per_class;

  const SelectionResult r = fine_iterate(ds, a.rounds, opts);
  io::write_selection(r, out);
  std::vector<fs::path> written{out};

  params = {{"in", a.in},
            {"zeta", a.zeta},
            {"rounds", a.rounds},
            {"subsample", a.subsample},
            {"score_scope", a.score_scope},
            {"gmm_scope", a.gmm_scope},
            {"n", ds.size()},
            {"num_classes", ds.num_classes},
            {"clean_count", r.clean_count()},
            {"rounds_run", r.rounds_run},
            {"warnings", r.warnings}};
  std::cout << "selected " << r.clean_count() << " of " << ds.size() << " samples as clean\n";
  if (ds.true_labels) {
    const Metrics m = compute_prf(r.clean_mask, ds.clean_mask());
    const fs::path report = sibling(out, ".metrics.json");
    json j = metrics_json(m);
    j["clean_count"] = r.clean_count();
    j["n"] = ds.size();
    io::write_text(report, j.dump(2) + "\n");
    written.push_back(report);
    std::cout << "precision " << io::format_double(m.precision) << " recall " << io::format_double(m.recall)
              << " f_score " << io::format_double(m.f_score) << '\n';
  }
  return written;
}

struct BoundSweepArgs {
  std::string tau = "0.05,0.1,0.25,0.67";
  std::string theta = "1.0471975511965976";
  std::string sigma = "0.1";
  std::size_t d = 64;
  std::size_t n_plus = 2000;
  double delta = 0.05;
  double c = 1.0;
  int trials = 0;
  bool calibrate = false;
};

std::vector<fs::path> run_bound_sweep(const BoundSweepArgs& a, const Global& g, const fs::path& out, json& params) {
  const auto taus = parse_sweep(a.tau, "--tau");
  const auto thetas = parse_sweep(a.theta, "--theta");
  const auto sigmas = parse_sweep(a.sigma, "--sigma");
  if (a.n_plus == 0 || a.d == 0) throw UsageError("--n-plus and --d must be positive");
  if (!(a.delta > 0.0 && a.delta < 1.0)) throw UsageError("--delta must lie in (0, 1)");
  if (!(a.c >= 0.0)) throw UsageError("--c must be >= 0");
  if (a.trials < 0) throw UsageError("--trials must be >= 0");
  if (a.calibrate && a.trials == 0) throw UsageError("--calibrate needs --trials >= 1");
  for (double t : taus)
    if (t < 0.0) throw UsageError("--tau must be >= 0");
  for (double s : sigmas)
    if (s < 0.0) throw UsageError("--sigma must be >= 0");

  struct Row {
    double theta, sigma;
    std::size_t n_minus;
  };
  std::vector<Row> rows;
  for (double th : thetas)
    for (double s : sigmas)
      for (double t : taus) rows.push_back({th, s, static_cast<std::size_t>(std::llround(t * static_cast<double>(a.n_plus)))});

  const auto trials = static_cast<std::size_t>(a.trials);
  std::vector<double> cell(rows.size() * trials, 0.0);
  parallel_for(cell.size(), g.threads, [&](std::size_t i) {
    const Row& r = rows[i / trials];
    const std::uint64_t s = stream_seed(g.seed, i % trials);
    const auto data = generate_lda({.d = a.d, .n_clean = a.n_plus, .n_noisy = r.n_minus, .theta = r.theta, .sigma = r.sigma, .seed = s});
    cell[i] = empirical_perturbation(data, s, a.delta, a.c).empirical_perturbation;
  });
  std::vector<double> mean(rows.size(), 0.0), sd(rows.size(), 0.0);
  for (std::size_t r = 0; r < rows.size() && trials > 0; ++r) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t t = 0; t < trials; ++t) sum += cell[r * trials + t];
    mean[r] = sum / static_cast<double>(trials);
    for (std::size_t t = 0; t < trials; ++t) sq += (cell[r * trials + t] - mean[r]) * (cell[r * trials + t] - mean[r]);
    sd[r] = trials > 1 ? std::sqrt(sq / static_cast<double>(trials - 1)) : 0.0;
  }

  double c = a.c;
  if (a.calibrate) {
    const Row& r0 = rows.front();
    c = calibrate_constant({a.n_plus, r0.n_minus, r0.theta, r0.sigma, a.d, a.delta, 0.0}, mean.front());
    params["calibration"] = {{"at_tau", static_cast<double>(r0.n_minus) / static_cast<double>(a.n_plus)},
                             {"at_theta", r0.theta},
                             {"at_sigma", r0.sigma},
                             {"empirical_mean", mean.front()},
                             {"constant_c", c}};
  }

  std::vector<std::string> header{"tau", "theta", "sigma", "n_plus", "n_minus", "bound"};
  if (trials > 0) {
    header.push_back("empirical_mean");
    header.push_back("empirical_std");
  }
  io::CsvTable table(header);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    const BoundParams p{a.n_plus, r.n_minus, r.theta, r.sigma, a.d, a.delta, c};
    std::vector<double> v{p.tau(), r.theta, r.sigma, static_cast<double>(a.n_plus), static_cast<double>(r.n_minus),
                          perturbation_bound(p)};
    if (trials > 0) {
      v.push_back(mean[i]);
      v.push_back(sd[i]);
    }
    table.add_row(v);
  }
  table.write(out);
  params.update({{"tau", a.tau},
                 {"theta", a.theta},
                 {"sigma", a.sigma},
                 {"d", a.d},
                 {"n_plus", a.n_plus},
                 {"delta", a.delta},
                 {"constant_c", c},
                 {"trials", a.trials},
                 {"rows", rows.size()}});
  return {out};
}

struct PrArgs {
  std::string delta_gap = "1,2,4";
  std::string sigma = "1";
  std::size_t n_plus = 100000;
  std::size_t n_minus = 100000;
  double delta = 0.05;
  double c = 1.0;
  double p_plus = -1.0;  // default: n_plus / (n_plus + n_minus)
  int trials = 0;
};

std::vector<fs::path> run_pr_bounds(const PrArgs& a, const Global& g, const fs::path& out, json& params) {
  const auto gaps = parse_sweep(a.delta_gap, "--delta-gap");
  const auto sigmas = parse_sweep(a.sigma, "--sigma");
  if (a.n_plus == 0 || a.n_minus == 0) throw UsageError("--n-plus and --n-minus must be positive");
  if (!(a.delta > 0.0 && a.delta < 1.0)) throw UsageError("--delta must lie in (0, 1)");
  if (!(a.c >= 0.0)) throw UsageError("--c must be >= 0");
  if (a.trials < 0) throw UsageError("--trials must be >= 0");
  for (double s : sigmas)
    if (!(s > 0.0)) throw UsageError("--sigma must be > 0");
  const double p_plus = a.p_plus >= 0.0
                            ? a.p_plus
                            : static_cast<double>(a.n_plus) / static_cast<double>(a.n_plus + a.n_minus);
  if (p_plus > 1.0) throw UsageError("--p-plus must lie in [0, 1]");

  struct Row {
    double gap, sigma;
    PrBounds b;
  };
  std::vector<Row> rows;
  for (double s : sigmas)
    for (double gap : gaps)
      rows.push_back({gap, s,
                      pr_lower_bounds({.delta_gap = gap, .sigma = s, .n_plus = a.n_plus, .n_minus = a.n_minus, .delta = a.delta,
                                       .constant_c = a.c, .p_plus = p_plus, .p_minus = 1.0 - p_plus})});

  const auto trials = static_cast<std::size_t>(a.trials);
  std::vector<PrSample> cell(rows.size() * trials);
  parallel_for(cell.size(), g.threads, [&](std::size_t i) {
    const Row& r = rows[i / trials];
    cell[i] = simulate_midpoint_rule(r.gap, r.sigma, a.n_plus, a.n_minus, stream_seed(stream_seed(g.seed, i / trials), i % trials));
  });

  std::vector<std::string> header{"delta_gap", "sigma", "recall_lb", "precision_lb"};
  if (trials > 0) {
    for (const char* h : {"mc_recall_mean", "mc_precision_mean", "mc_recall_pass", "mc_precision_pass", "mc_both_pass"})
      header.emplace_back(h);
  }
  io::CsvTable table(header);
  json pass = json::array();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::vector<double> v{rows[r].gap, rows[r].sigma, rows[r].b.recall_lb, rows[r].b.precision_lb};
    if (trials > 0) {
      double rec = 0.0, prec = 0.0;
      std::size_t rp = 0, pp = 0, both = 0;
      for (std::size_t t = 0; t < trials; ++t) {
        const PrSample& s = cell[r * trials + t];
        rec += s.recall;
        prec += s.precision;
        const bool ro = s.recall >= rows[r].b.recall_lb, po = s.precision >= rows[r].b.precision_lb;
        rp += ro;
        pp += po;
        both += ro && po;
      }
      const auto n = static_cast<double>(trials);
      v.insert(v.end(), {rec / n, prec / n, static_cast<double>(rp) / n, static_cast<double>(pp) / n,
                         static_cast<double>(both) / n});
      pass.push_back({{"delta_gap", rows[r].gap}, {"sigma", rows[r].sigma}, {"both_pass", both}, {"trials", trials}});
    }
    table.add_row(v);
  }
  table.write(out);
  params = {{"delta_gap", a.delta_gap}, {"sigma", a.sigma},   {"n_plus", a.n_plus}, {"n_minus", a.n_minus},
            {"delta", a.delta},         {"constant_c", a.c}, {"p_plus", p_plus},   {"trials", a.trials}};
  if (trials > 0) params["monte_carlo"] = pass;
  return {out};
}

struct HeatmapArgs {
  std::string in;
  Label cls = 0;
  std::size_t d = 64;
  std::size_t n_clean = 2000;
  std::size_t n_noisy = 500;
  double theta = std::numbers::pi / 2;
  double sigma = 0.05;
  std::size_t resolution = 360;
  bool clean_only = false;
  std::int64_t plane_seed = -1;  // default: --seed
};

std::vector<fs::path> run_heatmap(const HeatmapArgs& a, const Global& g, const fs::path& out, json& params) {
  if (a.resolution == 0) throw UsageError("--resolution must be positive");
  std::vector<double> rows;
  std::vector<bool> mask;
  Vector u;
  if (!a.in.empty()) {
    const Dataset ds = io::read_features(a.in);
    if (!ds.true_labels) throw Error(ErrorCode::InvalidArgument, "heatmap input needs true labels");
    if (a.cls >= ds.num_classes) throw UsageError("--class is out of range");
    const auto idx = ds.members(a.cls);
    const auto truth = ds.clean_mask();
    GramMatrix gram(ds.dim);
    for (auto i : idx) {
      gram.add(ds.row(i));
      rows.insert(rows.end(), ds.row(i).begin(), ds.row(i).end());
      mask.push_back(truth[i]);
    }
    if (idx.empty()) throw Error(ErrorCode::EmptyClass, "class has no samples");
    u = top_eigenpair(gram, stream_seed(g.seed, a.cls)).u;
    params = {{"in", a.in}, {"class", a.cls}};
  } else {
    if (a.d == 0 || a.n_clean == 0) throw UsageError("--d and --n-clean must be positive");
    const auto data = generate_lda({.d = a.d, .n_clean = a.n_clean, .n_noisy = a.n_noisy, .theta = a.theta, .sigma = a.sigma, .seed = g.seed});
    u = empirical_perturbation(data, g.seed).u;
    rows = data.features;
    mask = data.true_mask;
    params = {{"d", a.d}, {"n_clean", a.n_clean}, {"n_noisy", a.n_noisy}, {"theta", a.theta}, {"sigma", a.sigma}};
  }
  const std::uint64_t plane_seed = a.plane_seed >= 0 ? static_cast<std::uint64_t>(a.plane_seed) : g.seed;
  const auto pts = hyperplane_heatmap(rows, mask, u, {.resolution = a.resolution, .seed = plane_seed, .clean_only = a.clean_only});
  io::CsvTable table({"phi", "value"});
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    table.add_row({p.phi, p.value});
    mx = std::max(mx, p.value);
  }
  table.write(out);
  params.update({{"resolution", a.resolution},
                 {"clean_only", a.clean_only},
                 {"plane_seed", plane_seed},
                 {"value_at_u", pts.front().value},
                 {"grid_max", mx}});
  return {out};
}

struct SubsampleArgs {
  std::string in;
  std::size_t k = 10;
  std::size_t per_class_n = 5000;
  std::size_t d = 128;
  double sigma = 0.1;
  std::string fractions = "0.01,0.1,1.0";
  int trials = 10;
};

std::vector<fs::path> run_subsample(const SubsampleArgs& a, const Global& g, const fs::path& out, json& params) {
  const auto fractions = parse_sweep(a.fractions, "--fractions");
  for (double f : fractions) check_unit_interval(f, "--fractions", true);
  if (a.trials < 1) throw UsageError("--trials must be >= 1");
  Dataset ds;
  if (!a.in.empty()) {
    ds = io::read_features(a.in);
    params = {{"in", a.in}};
  } else {
    if (a.k < 1 || a.per_class_n == 0 || a.d == 0) throw UsageError("--k, --per-class-n and --d must be positive");
    ds = generate_multiclass(a.d, a.k, a.per_class_n, a.sigma, g.seed).dataset;
    params = {{"k", a.k}, {"per_class_n", a.per_class_n}, {"d", a.d}, {"sigma", a.sigma}};
  }
  FineOptions opts;
  opts.seed = g.seed;
  opts.threads = g.threads;
  const SimilarityTable t = subsample_similarity(ds, fractions, a.trials, opts);
  io::CsvTable table({"fraction", "mean_abs_cos", "std_abs_cos", "cells"});
  for (const auto& r : t.rows) table.add_row({r.fraction, r.mean_abs_cos, r.std_abs_cos, static_cast<double>(r.cells)});
  table.write(out);
  params.update({{"fractions", a.fractions}, {"trials", a.trials}, {"warnings", t.warnings}});
  return {out};
}

// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args);

int replay(const std::string& manifest_path, const Global& g, bool output_given) {
  json m;
  try {
    std::ifstream in(manifest_path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + manifest_path);
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("manifest: ") + e.what());
  }
  if (!m.contains("args") || !m.contains("output")) throw Error(ErrorCode::FormatError, "manifest lacks args/output");
  auto args = m["args"].get<std::vector<std::string>>();
  args.push_back("--output");
  args.push_back(output_given ? g.output : m["output"].get<std::string>());
  return run(args);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"FINE noisy-label detection toolkit", "fine"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  Global g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = auto)")->capture_default_str();
  auto* output_opt = app.add_option("--output", g.output, "Output path");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic feature file");
  synth->add_option("--d", sa.d)->capture_default_str();
  synth->add_option("--n-clean", sa.n_clean)->capture_default_str();
  synth->add_option("--n-noisy", sa.n_noisy)->capture_default_str();
  synth->add_option("--theta", sa.theta)->capture_default_str();
  synth->add_option("--sigma", sa.sigma)->capture_default_str();
  synth->add_flag("--multiclass", sa.multiclass);
  synth->add_option("--k", sa.k)->capture_default_str();
  synth->add_option("--per-class-n", sa.per_class_n)->capture_default_str();

  InjectArgs ia;
  auto* injectc = app.add_subcommand("inject", "Corrupt observed labels");
  injectc->add_option("--in", ia.in)->required();
  injectc->add_option("--kind", ia.kind)
      ->check(CLI::IsMember({"symmetric", "asymmetric-pairs", "asymmetric-circular"}))
      ->capture_default_str();
  injectc->add_option("--rate", ia.rate)->capture_default_str();
  injectc->add_option("--mapping", ia.mapping, "from>to pairs, e.g. 9>1,2>0");
  injectc->add_option("--superclass-size", ia.superclass_size);
  injectc->add_flag("--include-true", ia.include_true);

  DetectArgs da;
  auto* detect = app.add_subcommand("detect", "Run FINE sample selection");
  detect->add_option("--in", da.in)->required();
  detect->add_option("--zeta", da.zeta)->capture_default_str();
  detect->add_option("--rounds", da.rounds)->capture_default_str();
  detect->add_option("--subsample", da.subsample)->capture_default_str();
  detect->add_option("--score-scope", da.score_scope)->check(CLI::IsMember({"all", "prev-clean"}))->capture_default_str();
  detect->add_option("--gmm-scope", da.gmm_scope)->check(CLI::IsMember({"per-class", "global"}))->capture_default_str();

  auto* analyze = app.add_subcommand("analyze", "Theory checks and simulations");
  analyze->require_subcommand(1);

  BoundSweepArgs ba;
  auto* bound = analyze->add_subcommand("bound-sweep", "Perturbation bound over a parameter grid");
  bound->add_option("--tau", ba.tau, "value, list or start:stop:step")->capture_default_str();
  bound->add_option("--theta", ba.theta)->capture_default_str();
  bound->add_option("--sigma", ba.sigma)->capture_default_str();
  bound->add_option("--d", ba.d)->capture_default_str();
  bound->add_option("--n-plus", ba.n_plus)->capture_default_str();
  bound->add_option("--delta", ba.delta)->capture_default_str();
  bound->add_option("--c", ba.c)->capture_default_str();
  bound->add_option("--trials", ba.trials, "Synthetic trials per point for the empirical column")->capture_default_str();
  bound->add_flag("--calibrate", ba.calibrate, "Fit C at the first grid point");

  PrArgs pa;
  auto* pr = analyze->add_subcommand("pr-bounds", "Precision/recall lower bounds");
  pr->add_option("--delta-gap", pa.delta_gap)->capture_default_str();
  pr->add_option("--sigma", pa.sigma)->capture_default_str();
  pr->add_option("--n-plus", pa.n_plus)->capture_default_str();
  pr->add_option("--n-minus", pa.n_minus)->capture_default_str();
  pr->add_option("--delta", pa.delta)->capture_default_str();
  pr->add_option("--c", pa.c)->capture_default_str();
  pr->add_option("--p-plus", pa.p_plus);
  pr->add_option("--trials", pa.trials, "Monte-Carlo trials per point")->capture_default_str();

  HeatmapArgs ha;
  auto* heat = analyze->add_subcommand("heatmap", "Objective on a random plane through u");
  heat->add_option("--in", ha.in);
  heat->add_option("--class", ha.cls)->capture_default_str();
  heat->add_option("--d", ha.d)->capture_default_str();
  heat->add_option("--n-clean", ha.n_clean)->capture_default_str();
  heat->add_option("--n-noisy", ha.n_noisy)->capture_default_str();
  heat->add_option("--theta", ha.theta)->capture_default_str();
  heat->add_option("--sigma", ha.sigma)->capture_default_str();
  heat->add_option("--resolution", ha.resolution)->capture_default_str();
  heat->add_flag("--clean-only", ha.clean_only);
  heat->add_option("--plane-seed", ha.plane_seed);

  SubsampleArgs ssa;
  auto* sub = analyze->add_subcommand("subsample-sim", "Eigenvector agreement under subsampling");
  sub->add_option("--in", ssa.in);
  sub->add_option("--k", ssa.k)->capture_default_str();
  sub->add_option("--per-class-n", ssa.per_class_n)->capture_default_str();
  sub->add_option("--d", ssa.d)->capture_default_str();
  sub->add_option("--sigma", ssa.sigma)->capture_default_str();
  sub->add_option("--fractions", ssa.fractions)->capture_default_str();
  sub->add_option("--trials", ssa.trials)->capture_default_str();

  std::string manifest_in;
  auto* rep = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  rep->add_option("manifest", manifest_in)->required();

  std::vector<const char*> argv{"fine"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*rep) return replay(manifest_in, g, output_opt->count() > 0);

    std::string name;
    std::string default_out;
    std::function<std::vector<fs::path>(const fs::path&, json&)> action;
    if (*synth) {
      name = "synth", default_out = "synth.fine";
      action = [&](const fs::path& o, json& p) { return run_synth(sa, g, o, p); };
    } else if (*injectc) {
      name = "inject", default_out = "injected.fine";
      action = [&](const fs::path& o, json& p) { return run_inject(ia, g, o, p); };
    } else if (*detect) {
      name = "detect", default_out = "selection.bin";
      action = [&](const fs::path& o, json& p) { return run_detect(da, g, o, p); };
    } else if (*bound) {
      name = "analyze bound-sweep", default_out = "bound_sweep.csv";
      action = [&](const fs::path& o, json& p) { return run_bound_sweep(ba, g, o, p); };
    } else if (*pr) {
      name = "analyze pr-bounds", default_out = "pr_bounds.csv";
      action = [&](const fs::path& o, json& p) { return run_pr_bounds(pa, g, o, p); };
    } else if (*heat) {
      name = "analyze heatmap", default_out = "heatmap.csv";
      action = [&](const fs::path& o, json& p) { return run_heatmap(ha, g, o, p); };
    } else {
      name = "analyze subsample-sim", default_out = "subsample_sim.csv";
      action = [&](const fs::path& o, json& p) { return run_subsample(ssa, g, o, p); };
    }

    const fs::path out = g.output.empty() ? fs::path(default_out) : fs::path(g.output);
    ensure_parent(out);
    const auto start = std::chrono::steady_clock::now();
    json params = json::object();
    const auto written = action(out, params);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    json manifest;
    manifest["tool"] = "fine";
    manifest["version"] = std::string(kVersion);
    manifest["subcommand"] = name;
    manifest["args"] = strip_output(args);
    manifest["output"] = out.string();
    manifest["seed"] = g.seed;
    manifest["threads"] = g.threads;
    manifest["parameters"] = params;
    json files = json::array();
    for (const auto& f : written) files.push_back(f.string());
    manifest["outputs"] = files;
    manifest["wall_time_seconds"] = wall;
    const fs::path mpath = sibling(out, ".manifest.json");
    io::write_text(mpath, manifest.dump(2) + "\n");
    for (const auto& f : written) std::cout << "wrote " << f.string() << '\n';
    std::cout << "wrote " << mpath.string() << '\n';
    return kExitOk;
  } catch (const UsageError& e) {
    std::cerr << "fine: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "fine: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}
