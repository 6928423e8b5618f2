// Command-line front end: simulate, recover, evaluate, benchmark.

#include <CLI11.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "nbaitv/nbaitv.hpp"

namespace fs = std::filesystem;
using namespace nbaitv;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct GlobalOptions {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string output_dir = ".";
  std::string config;
};

/// Relative output paths land under --output-dir.
fs::path resolve_output(const GlobalOptions& global, const std::string& path) {
  fs::path p(path);
  if (p.is_relative()) p = fs::path(global.output_dir) / p;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

/// Metric values print as shortest round-trip decimals, always with a fraction
/// or exponent so "1" shows up as "1.0".
std::string metric_text(double v) {
  std::string s = format_number(v);
  if (std::isfinite(v) && s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::uint64_t fnv1a(const fs::path& path) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : detail::read_bytes(path)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// [solver] and [blur] sections of --config, if any, seed the defaults that
/// explicit flags then override.
void apply_config_defaults(const GlobalOptions& global, SolverConfig& solver, BlurSpec& blur) {
  if (global.config.empty()) return;
  std::ifstream in(global.config);
  if (!in) throw IoError("cannot open config '" + global.config + "'");
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (auto s = tree.get_child_optional("solver")) apply_solver_keys(solver, *s);
  if (auto b = tree.get_child_optional("blur")) {
    for (const auto& [key, node] : *b) {
      if (key == "size") blur.size = static_cast<std::size_t>(parse_number(node.get_value<std::string>()));
      else if (key == "sigma") blur.sigma = parse_number(node.get_value<std::string>());
      else throw std::invalid_argument("unknown key [blur] " + key);
    }
  }
}

struct SimulateOptions {
  std::string truth;
  double r = 1.0;
  bool poisson = false;
  std::size_t blur_size = 10;
  double blur_sigma = 2.5;
  std::string out = "counts.txt";
};

int cmd_simulate(const GlobalOptions& global, const SimulateOptions& opt) {
  const ImageGrid truth = load_truth(opt.truth);
  const NoiseModel model = opt.poisson ? NoiseModel{Poisson{}} : noise_model_from_dispersion(opt.r);
  const BlurSpec blur{opt.blur_size, opt.blur_sigma};
  const NbObservation obs = simulate_observation(truth, blur, model, global.seed);

  const fs::path counts_path = resolve_output(global, opt.out);
  fs::path pgm_path = counts_path;
  pgm_path.replace_extension(".pgm");
  const fs::path manifest_path = counts_path.string() + ".manifest.ini";
  save_counts(obs.counts, counts_path);
  save_image(to_image(obs.counts), pgm_path, ImageFormat::pgm16, 65535.0);

  Manifest m;
  m.set("simulate", "truth", opt.truth);
  m.set("simulate", "model", model_name(model));
  m.set("simulate", "r", dispersion(model));
  m.set("simulate", "seed", global.seed);
  m.set("simulate", "rng", "mt19937_64");
  m.set("simulate", "sampler", "gamma-poisson mixture");
  record_blur(m, blur);
  m.set("output", "counts", counts_path.string());
  m.set("output", "counts_fnv1a", hex(fnv1a(counts_path)));
  m.set("output", "visualization", pgm_path.string());
  m.write(manifest_path);
  std::cout << "wrote " << counts_path.string() << '\n';
  return 0;
}

struct RecoverOptions {
  std::string counts;
  std::string model = "nb";
  double r = 1.0;
  std::optional<double> tau, alpha, beta0, sigma, epsilon, beta_max;
  std::optional<std::size_t> max_iters, blur_size;
  std::optional<double> blur_sigma;
  bool nonneg_clip = false;
  std::string out = "recovered.pgm";
  std::string format;
  double peak = 255.0;
  std::string reference;
  bool clip_before_score = false;
};

int cmd_recover(const GlobalOptions& global, const RecoverOptions& opt) {
  SolverConfig solver;
  BlurSpec blur;
  apply_config_defaults(global, solver, blur);
  if (opt.tau) solver.tau = *opt.tau;
  if (opt.alpha) solver.alpha = *opt.alpha;
  if (opt.beta0) solver.beta0 = *opt.beta0;
  if (opt.sigma) solver.sigma = *opt.sigma;
  if (opt.epsilon) solver.epsilon = *opt.epsilon;
  if (opt.beta_max) solver.beta_max = *opt.beta_max;
  if (opt.max_iters) solver.max_iters = *opt.max_iters;
  if (opt.nonneg_clip) solver.nonneg_clip = true;
  if (opt.blur_size) blur.size = *opt.blur_size;
  if (opt.blur_sigma) blur.sigma = *opt.blur_sigma;
  solver.model = recovery_noise_model(parse_recovery_model(opt.model), opt.r);
  solver.validate();

  const CountGrid counts = load_counts(opt.counts);
  const auto op = spectral_of_kernel(gaussian_kernel(blur), counts.height(), counts.width());
  const RecoveryResult result = run_admm(counts, op, solver);

  const fs::path out_path = resolve_output(global, opt.out);
  const ImageFormat format = opt.format.empty() ? format_from_extension(out_path) : parse_image_format(opt.format);
  save_image(result.f_hat, out_path, format, opt.peak);

  const fs::path history_path = out_path.string() + ".history.csv";
  {
    std::ofstream h(history_path, std::ios::binary);
    if (!h) throw IoError("cannot write '" + history_path.string() + "'");
    h << "iteration,objective,data_fit,aitv,residual_blur,residual_gradient,relative_change,beta\n";
    for (std::size_t k = 0; k < result.history.size(); ++k) {
      const auto& rec = result.history[k];
      h << k + 1 << ',' << format_number(rec.objective) << ',' << format_number(rec.data_fit) << ','
        << format_number(rec.aitv) << ',' << format_number(rec.residual_blur) << ','
        << format_number(rec.residual_gradient) << ',' << format_number(rec.relative_change) << ','
        << format_number(rec.beta) << '\n';
    }
  }

  Manifest m;
  m.set("recover", "counts", opt.counts);
  m.set("recover", "counts_fnv1a", hex(fnv1a(opt.counts)));
  m.set("recover", "initializer", "observation");
  record_blur(m, blur);
  record_solver(m, solver);
  m.set("result", "iterations", static_cast<std::uint64_t>(result.iterations));
  m.set("result", "terminated_by", to_string(result.terminated_by));
  if (!result.history.empty()) {
    m.set("result", "final_objective", result.history.back().objective);
    m.set("result", "final_relative_change", result.history.back().relative_change);
  }
  m.set("output", "image", out_path.string());
  m.set("output", "format", std::string(to_string(format)));
  m.set("output", "peak", opt.peak);
  m.set("output", "history", history_path.string());
  if (!opt.reference.empty()) {
    const ImageGrid ref = load_truth(opt.reference);
    ImageGrid scored = result.f_hat;
    if (opt.clip_before_score) {
      for (double& v : scored) v = std::clamp(v, 0.0, opt.peak);
    }
    m.set("metrics", "reference", opt.reference);
    m.set("metrics", "clip_before_score", opt.clip_before_score);
    m.set("metrics", "psnr", psnr(ref, scored, opt.peak));
    m.set("metrics", "ssim", ssim(ref, scored, SsimParams{.peak = opt.peak}));
  }
  m.write(out_path.string() + ".manifest.ini");
  std::cout << "wrote " << out_path.string() << " (" << result.iterations << " iterations, "
            << to_string(result.terminated_by) << ")\n";
  return 0;
}

struct EvaluateOptions {
  std::string reference;
  std::string test;
  double peak = 255.0;
  bool clip_before_score = false;
};

int cmd_evaluate(const EvaluateOptions& opt) {
  const ImageGrid ref = load_truth(opt.reference);
  ImageGrid test = load_truth(opt.test);
  if (opt.clip_before_score) {
    for (double& v : test) v = std::clamp(v, 0.0, opt.peak);
  }
  const double p = psnr(ref, test, opt.peak);
  const double s = ssim(ref, test, SsimParams{.peak = opt.peak});
  std::cout << "psnr=" << metric_text(p) << " ssim=" << metric_text(s) << '\n';
  return 0;
}

struct BenchmarkOptions {
  std::string config;
  std::optional<std::size_t> jobs;
  bool clip_before_score = false;
};

int cmd_benchmark(const GlobalOptions& global, const BenchmarkOptions& opt, bool output_dir_given) {
  const std::string path = !opt.config.empty() ? opt.config : global.config;
  if (path.empty()) throw std::invalid_argument("benchmark: a config file is required (--config)");
  ExperimentConfig config = load_experiment_config(path);
  if (global.seed_given) config.base_seed = global.seed;
  if (output_dir_given) config.output_dir = global.output_dir;
  if (opt.jobs) config.jobs = *opt.jobs;
  if (opt.clip_before_score) config.clip_before_score = true;
  config.validate();

  const ImageGrid truth = load_truth(config.input_image);
  const BenchmarkReport report = run_benchmark(config, truth);
  write_benchmark_outputs(report, config, config.output_dir);
  write_markdown_table(report, std::cout);
  if (!report.all_ok()) {
    std::cerr << "error: some trials failed; see " << (config.output_dir / "trials.csv").string() << '\n';
    return kExitRuntime;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deblurring and denoising of negative binomial count images with AITV regularization"};
  app.name("nbaitv");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  GlobalOptions global;
  auto* seed_opt = app.add_option("--seed", global.seed, "Random seed (simulate) or base seed override (benchmark)");
  auto* outdir_opt = app.add_option("--output-dir", global.output_dir, "Directory for relative output paths");
  app.add_option("--config", global.config, "INI file with [experiment], [blur], [solver] sections");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Blur a truth image and draw NB or Poisson counts");
  simulate->add_option("--truth", sim.truth, "Truth image path, or phantom:N / phantom:HxW")->required();
  auto* r_opt = simulate->add_option("--r", sim.r, "NB dispersion parameter")->check(CLI::PositiveNumber);
  simulate->add_flag("--poisson", sim.poisson, "Draw Poisson counts instead")->excludes(r_opt);
  simulate->add_option("--blur-size", sim.blur_size, "Gaussian blur window size")->check(CLI::PositiveNumber);
  simulate->add_option("--blur-sigma", sim.blur_sigma, "Gaussian blur standard deviation")->check(CLI::PositiveNumber);
  simulate->add_option("--out", sim.out, "Count matrix path");

  RecoverOptions rec;
  auto* recover = app.add_subcommand("recover", "Run the ADMM solver on a count matrix");
  recover->add_option("--counts", rec.counts, "Count matrix path")->required()->check(CLI::ExistingFile);
  recover->add_option("--model", rec.model, "nb or poisson")->check(CLI::IsMember({"nb", "poisson"}));
  recover->add_option("--r", rec.r, "NB dispersion parameter")->check(CLI::PositiveNumber);
  recover->add_option("--tau", rec.tau, "Regularization weight");
  recover->add_option("--alpha", rec.alpha, "AITV weight in [0, 1]");
  recover->add_option("--beta0", rec.beta0, "Initial penalty");
  recover->add_option("--sigma", rec.sigma, "Penalty growth factor");
  recover->add_option("--epsilon", rec.epsilon, "Relative change tolerance");
  recover->add_option("--max-iters", rec.max_iters, "Iteration cap");
  recover->add_option("--beta-max", rec.beta_max, "Penalty cap");
  recover->add_flag("--nonneg-clip", rec.nonneg_clip, "Clamp the returned image at zero");
  recover->add_option("--blur-size", rec.blur_size, "Gaussian blur window size");
  recover->add_option("--blur-sigma", rec.blur_sigma, "Gaussian blur standard deviation");
  recover->add_option("--out", rec.out, "Output image path (.pgm or .png)");
  recover->add_option("--format", rec.format, "pgm8, pgm16 or png8 (default from extension)");
  recover->add_option("--peak", rec.peak, "Intensity mapped to the top sample value")->check(CLI::PositiveNumber);
  recover->add_option("--reference", rec.reference, "Score against this truth image in the manifest");
  recover->add_flag("--clip-before-score", rec.clip_before_score, "Clamp to [0, peak] before scoring");

  EvaluateOptions eval;
  auto* evaluate = app.add_subcommand("evaluate", "Print PSNR and SSIM of a test image");
  evaluate->add_option("--reference", eval.reference, "Reference image (or phantom:N)")->required();
  evaluate->add_option("--test", eval.test, "Test image")->required();
  evaluate->add_option("--peak", eval.peak, "Peak intensity")->check(CLI::PositiveNumber);
  evaluate->add_flag("--clip-before-score", eval.clip_before_score, "Clamp the test image to [0, peak]");

  BenchmarkOptions bench;
  auto* benchmark = app.add_subcommand("benchmark", "Run the NB vs Poisson sweep from a config file");
  benchmark->add_option("config_file", bench.config, "Experiment INI (alternative to --config)");
  benchmark->add_option("--jobs", bench.jobs, "Worker threads")->check(CLI::PositiveNumber);
  benchmark->add_flag("--clip-before-score", bench.clip_before_score, "Clamp outputs to [0, peak] before scoring");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  global.seed_given = seed_opt->count() > 0;

  try {
    if (*simulate) return cmd_simulate(global, sim);
    if (*recover) return cmd_recover(global, rec);
    if (*evaluate) return cmd_evaluate(eval);
    if (*benchmark) return cmd_benchmark(global, bench, outdir_opt->count() > 0);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
