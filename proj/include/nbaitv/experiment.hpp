#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "nbaitv/admm.hpp"
#include "nbaitv/image.hpp"
#include "nbaitv/image_io.hpp"
#include "nbaitv/metrics.hpp"
#include "nbaitv/noise_model.hpp"
#include "nbaitv/operators.hpp"
#include "nbaitv/phantom.hpp"
#include "nbaitv/version.hpp"

namespace nbaitv {

/// Shortest round-trip decimal; "inf", "-inf", "nan" for non-finite values.
inline std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

inline double parse_number(std::string_view text) {
  std::string s(text);
  s.erase(0, s.find_first_not_of(" \t"));
  s.erase(s.find_last_not_of(" \t") + 1);
  if (s == "inf" || s == "+inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  return value;
}

/// "phantom:N", "phantom:HxW" (optionally "ramp-phantom:...") or an image path.
inline ImageGrid load_truth(const std::string& source) {
  for (const auto& [prefix, ramp] : {std::pair<std::string, bool>{"phantom:", false}, {"ramp-phantom:", true}}) {
    if (source.rfind(prefix, 0) == 0) {
      const std::string dims = source.substr(prefix.size());
      const auto x = dims.find('x');
      const auto h = static_cast<std::size_t>(parse_number(dims.substr(0, x)));
      const auto w = x == std::string::npos ? h : static_cast<std::size_t>(parse_number(dims.substr(x + 1)));
      return make_phantom(h, w, ramp);
    }
  }
  return load_image(source);
}

/// Sectioned key = value document recording everything needed to rerun an output.
class Manifest {
 public:
  Manifest() { set("manifest", "version", std::string(kVersion)); }

  void set(const std::string& section, const std::string& key, const std::string& value) {
    auto& entries = sections_[section_index(section)].second;
    for (auto& [k, v] : entries) {
      if (k == key) {
        v = value;
        return;
      }
    }
    entries.emplace_back(key, value);
  }
  void set(const std::string& section, const std::string& key, double value) {
    set(section, key, format_number(value));
  }
  void set(const std::string& section, const std::string& key, std::uint64_t value) {
    set(section, key, std::to_string(value));
  }
  void set(const std::string& section, const std::string& key, bool value) {
    set(section, key, std::string(value ? "true" : "false"));
  }
  void set(const std::string& section, const std::string& key, const char* value) {
    set(section, key, std::string(value));
  }

  [[nodiscard]] std::string str() const {
    std::ostringstream out;
    for (std::size_t s = 0; s < sections_.size(); ++s) {
      if (s) out << '\n';
      out << '[' << sections_[s].first << "]\n";
      for (const auto& [k, v] : sections_[s].second) out << k << " = " << v << '\n';
    }
    return out.str();
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
    out << str();
  }

 private:
  std::size_t section_index(const std::string& name) {
    for (std::size_t s = 0; s < sections_.size(); ++s) {
      if (sections_[s].first == name) return s;
    }
    sections_.emplace_back(name, std::vector<std::pair<std::string, std::string>>{});
    return sections_.size() - 1;
  }

  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections_;
};

inline void record_solver(Manifest& m, const SolverConfig& c) {
  m.set("solver", "model", model_name(c.model));
  m.set("solver", "r", dispersion(c.model));
  m.set("solver", "tau", c.tau);
  m.set("solver", "alpha", c.alpha);
  m.set("solver", "beta0", c.beta0);
  m.set("solver", "sigma", c.sigma);
  m.set("solver", "epsilon", c.epsilon);
  m.set("solver", "max_iters", static_cast<std::uint64_t>(c.max_iters));
  m.set("solver", "beta_max", c.effective_beta_max());
  m.set("solver", "nonneg_clip", c.nonneg_clip);
}

inline void record_blur(Manifest& m, const BlurSpec& b) {
  m.set("blur", "size", static_cast<std::uint64_t>(b.size));
  m.set("blur", "sigma", b.sigma);
}

enum class RecoveryModel { nb, poisson };

inline RecoveryModel parse_recovery_model(std::string_view name) {
  if (name == "nb" || name == "NB") return RecoveryModel::nb;
  if (name == "poisson" || name == "Poisson") return RecoveryModel::poisson;
  throw std::invalid_argument("unknown model '" + std::string(name) + "' (expected nb or poisson)");
}

inline std::string display_name(RecoveryModel m) { return m == RecoveryModel::nb ? "NB" : "Poisson"; }
inline std::string key_name(RecoveryModel m) { return m == RecoveryModel::nb ? "nb" : "poisson"; }

/// Recovery model for counts simulated at dispersion r.
inline NoiseModel recovery_noise_model(RecoveryModel m, double r) {
  if (m == RecoveryModel::poisson) return Poisson{};
  return noise_model_from_dispersion(r);
}

struct ExperimentConfig {
  std::string input_image = "phantom:128";
  std::string image_name;  ///< defaults to the input's stem
  std::vector<double> r_values{1, 10, 25, 100, 1000};
  std::size_t trials = 10;
  std::vector<RecoveryModel> models{RecoveryModel::nb, RecoveryModel::poisson};
  BlurSpec blur;
  SolverConfig solver;
  std::uint64_t base_seed = 0;
  std::filesystem::path output_dir = "benchmark_out";
  double peak = 255.0;
  bool clip_before_score = false;
  std::size_t jobs = 1;

  [[nodiscard]] std::string resolved_image_name() const {
    if (!image_name.empty()) return image_name;
    if (input_image.find(':') != std::string::npos) return input_image.substr(0, input_image.find(':'));
    return std::filesystem::path(input_image).stem().string();
  }

  void validate() const {
    if (trials < 1) throw std::invalid_argument("experiment: trials must be at least 1");
    if (r_values.empty()) throw std::invalid_argument("experiment: r_values must not be empty");
    for (double r : r_values) {
      if (!(r > 0.0)) throw std::invalid_argument("experiment: r values must be positive");
    }
    if (models.empty()) throw std::invalid_argument("experiment: at least one model is required");
    if (!(peak > 0.0)) throw std::invalid_argument("experiment: peak must be positive");
    if (jobs < 1) throw std::invalid_argument("experiment: jobs must be at least 1");
    SolverConfig probe = solver;
    probe.validate();
  }
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

inline bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw std::invalid_argument("not a boolean: '" + text + "'");
}

inline std::size_t parse_count(const std::string& text) {
  const double v = parse_number(text);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) throw std::invalid_argument("not a count: '" + text + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

/// Apply [solver] keys onto an existing configuration.
inline void apply_solver_keys(SolverConfig& s, const boost::property_tree::ptree& section) {
  for (const auto& [key, node] : section) {
    const std::string value = node.get_value<std::string>();
    if (key == "tau") s.tau = parse_number(value);
    else if (key == "alpha") s.alpha = parse_number(value);
    else if (key == "beta0") s.beta0 = parse_number(value);
    else if (key == "sigma") s.sigma = parse_number(value);
    else if (key == "epsilon") s.epsilon = parse_number(value);
    else if (key == "max_iters") s.max_iters = detail::parse_count(value);
    else if (key == "beta_max") s.beta_max = parse_number(value);
    else if (key == "nonneg_clip") s.nonneg_clip = detail::parse_bool(value);
    else throw std::invalid_argument("unknown key [solver] " + key);
  }
}

/// INI layout: [experiment] (input_image, image_name, r_values, trials, models,
/// base_seed, output_dir, peak, clip_before_score, jobs), [blur] (size, sigma),
/// [solver] (tau, alpha, beta0, sigma, epsilon, max_iters, beta_max, nonneg_clip).
inline ExperimentConfig parse_experiment_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  for (const auto& [section, node] : tree) {
    if (section == "experiment") {
      for (const auto& [key, leaf] : node) {
        const std::string value = leaf.get_value<std::string>();
        if (key == "input_image") c.input_image = value;
        else if (key == "image_name") c.image_name = value;
        else if (key == "r_values") {
          c.r_values.clear();
          for (const auto& item : detail::split_list(value)) c.r_values.push_back(parse_number(item));
        } else if (key == "trials") c.trials = detail::parse_count(value);
        else if (key == "models") {
          c.models.clear();
          for (const auto& item : detail::split_list(value)) c.models.push_back(parse_recovery_model(item));
        } else if (key == "base_seed") c.base_seed = static_cast<std::uint64_t>(detail::parse_count(value));
        else if (key == "output_dir") c.output_dir = value;
        else if (key == "peak") c.peak = parse_number(value);
        else if (key == "clip_before_score") c.clip_before_score = detail::parse_bool(value);
        else if (key == "jobs") c.jobs = detail::parse_count(value);
        else throw std::invalid_argument("unknown key [experiment] " + key);
      }
    } else if (section == "blur") {
      for (const auto& [key, leaf] : node) {
        const std::string value = leaf.get_value<std::string>();
        if (key == "size") c.blur.size = detail::parse_count(value);
        else if (key == "sigma") c.blur.sigma = parse_number(value);
        else throw std::invalid_argument("unknown key [blur] " + key);
      }
    } else if (section == "solver") {
      apply_solver_keys(c.solver, node);
    } else {
      throw std::invalid_argument("unknown config section [" + section + "]");
    }
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  return parse_experiment_config(in);
}

/// Seed for trial t at the ri-th dispersion value. Both recovery models see
/// the same realization, so the map only needs to be injective in (ri, t).
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::size_t r_index, std::size_t trial,
                                 std::size_t trials) {
  return base_seed + static_cast<std::uint64_t>(r_index) * trials + trial;
}

struct TrialResult {
  RecoveryModel model = RecoveryModel::nb;
  double r = 0.0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double psnr = std::numeric_limits<double>::quiet_NaN();
  double ssim = std::numeric_limits<double>::quiet_NaN();
  std::size_t iterations = 0;
  std::string status = "ok";

  [[nodiscard]] bool ok() const noexcept { return status == "ok"; }
};

struct BenchmarkRow {
  std::string image_name;
  RecoveryModel model = RecoveryModel::nb;
  double r = 0.0;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  std::size_t trial_count = 0;
  std::uint64_t first_seed = 0;
  std::uint64_t last_seed = 0;
};

struct BenchmarkReport {
  std::string image_name;
  std::vector<double> r_values;
  std::vector<RecoveryModel> models;
  std::vector<TrialResult> trials;  ///< ordered (model, r, trial)
  std::vector<BenchmarkRow> rows;   ///< ordered (model, r)

  [[nodiscard]] bool all_ok() const {
    return std::all_of(trials.begin(), trials.end(), [](const TrialResult& t) { return t.ok(); });
  }
  [[nodiscard]] const BenchmarkRow& row(RecoveryModel model, double r) const {
    for (const auto& row : rows) {
      if (row.model == model && row.r == r) return row;
    }
    throw std::out_of_range("no benchmark row for the requested model and r");
  }
};

/// Arithmetic means over the successful trials of each (model, r) group.
inline std::vector<BenchmarkRow> aggregate(const std::string& image_name, const std::vector<TrialResult>& trials,
                                           const std::vector<RecoveryModel>& models,
                                           const std::vector<double>& r_values) {
  std::vector<BenchmarkRow> rows;
  for (auto model : models) {
    for (double r : r_values) {
      BenchmarkRow row{image_name, model, r};
      double sum_psnr = 0.0;
      double sum_ssim = 0.0;
      bool first = true;
      for (const auto& t : trials) {
        if (t.model != model || t.r != r) continue;
        if (first) row.first_seed = t.seed;
        row.first_seed = std::min(row.first_seed, t.seed);
        row.last_seed = std::max(row.last_seed, t.seed);
        first = false;
        if (!t.ok()) continue;
        sum_psnr += t.psnr;
        sum_ssim += t.ssim;
        ++row.trial_count;
      }
      const double n = static_cast<double>(row.trial_count);
      row.mean_psnr = row.trial_count ? sum_psnr / n : std::numeric_limits<double>::quiet_NaN();
      row.mean_ssim = row.trial_count ? sum_ssim / n : std::numeric_limits<double>::quiet_NaN();
      rows.push_back(row);
    }
  }
  return rows;
}

/// Simulate, recover and score every (r, trial) realization under each model.
///
/// Trials are independent; with jobs > 1 they run on a thread pool and land in
/// fixed slots, so the report does not depend on scheduling.
inline BenchmarkReport run_benchmark(const ExperimentConfig& config, const ImageGrid& truth) {
  config.validate();
  const std::size_t n_r = config.r_values.size();
  const std::size_t n_m = config.models.size();
  const std::size_t n_t = config.trials;
  const auto blur = spectral_of_kernel(gaussian_kernel(config.blur), truth.height(), truth.width());
  const SsimParams ssim_params{.peak = config.peak};

  std::vector<TrialResult> slots(n_m * n_r * n_t);
  auto slot = [&](std::size_t m, std::size_t ri, std::size_t t) -> TrialResult& {
    return slots[(m * n_r + ri) * n_t + t];
  };

  auto run_task = [&](std::size_t task) {
    const std::size_t ri = task / n_t;
    const std::size_t t = task % n_t;
    const double r = config.r_values[ri];
    const std::uint64_t seed = derive_seed(config.base_seed, ri, t, n_t);
    for (std::size_t m = 0; m < n_m; ++m) {
      TrialResult& out = slot(m, ri, t);
      out.model = config.models[m];
      out.r = r;
      out.trial = t;
      out.seed = seed;
    }
    CountGrid counts;
    try {
      Rng rng(seed);
      counts = simulate_counts(truth, blur, noise_model_from_dispersion(r), rng);
    } catch (const std::exception& e) {
      for (std::size_t m = 0; m < n_m; ++m) slot(m, ri, t).status = std::string("error: ") + e.what();
      return;
    }
    for (std::size_t m = 0; m < n_m; ++m) {
      TrialResult& out = slot(m, ri, t);
      try {
        SolverConfig solver = config.solver;
        solver.model = recovery_noise_model(config.models[m], r);
        auto result = run_admm(counts, blur, solver);
        if (config.clip_before_score) {
          for (double& v : result.f_hat) v = std::clamp(v, 0.0, config.peak);
        }
        out.psnr = psnr(truth, result.f_hat, config.peak);
        out.ssim = ssim(truth, result.f_hat, ssim_params);
        out.iterations = result.iterations;
      } catch (const std::exception& e) {
        out.status = std::string("error: ") + e.what();
      }
    }
  };

  const std::size_t n_tasks = n_r * n_t;
  const std::size_t workers = std::min(config.jobs, n_tasks);
  if (workers <= 1) {
    for (std::size_t task = 0; task < n_tasks; ++task) run_task(task);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t task = next++; task < n_tasks; task = next++) run_task(task);
      });
    }
  }

  BenchmarkReport report;
  report.image_name = config.resolved_image_name();
  report.r_values = config.r_values;
  report.models = config.models;
  report.trials = std::move(slots);
  report.rows = aggregate(report.image_name, report.trials, config.models, config.r_values);
  return report;
}

namespace detail {
inline std::string csv_safe(std::string text) {
  std::replace_if(text.begin(), text.end(), [](char c) { return c == ',' || c == '\n' || c == '\r'; }, ';');
  return text;
}
}  // namespace detail

inline void write_trials_csv(const BenchmarkReport& report, std::ostream& out) {
  out << "image,model,r,trial,seed,psnr,ssim,iterations,status\n";
  for (const auto& t : report.trials) {
    out << report.image_name << ',' << key_name(t.model) << ',' << format_number(t.r) << ',' << t.trial << ','
        << t.seed << ',' << format_number(t.psnr) << ',' << format_number(t.ssim) << ',' << t.iterations << ','
        << detail::csv_safe(t.status) << '\n';
  }
}

inline void write_summary_csv(const BenchmarkReport& report, std::ostream& out) {
  out << "image,model,r,mean_psnr,mean_ssim,trial_count,seed_range\n";
  for (const auto& row : report.rows) {
    out << row.image_name << ',' << key_name(row.model) << ',' << format_number(row.r) << ','
        << format_number(row.mean_psnr) << ',' << format_number(row.mean_ssim) << ',' << row.trial_count << ','
        << row.first_seed << '-' << row.last_seed << '\n';
  }
}

/// Models as rows; a PSNR block then an SSIM block with one column per r.
inline void write_markdown_table(const BenchmarkReport& report, std::ostream& out) {
  auto fixed = [](double v) {
    if (!std::isfinite(v)) return format_number(v);
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(2);
    s << v;
    return s.str();
  };
  out << "| Image | Model |";
  for (double r : report.r_values) out << " PSNR r=" << format_number(r) << " |";
  for (double r : report.r_values) out << " SSIM r=" << format_number(r) << " |";
  out << "\n|---|---|";
  for (std::size_t k = 0; k < 2 * report.r_values.size(); ++k) out << "---:|";
  out << '\n';
  for (auto model : report.models) {
    out << "| " << report.image_name << " | " << display_name(model) << " |";
    for (double r : report.r_values) out << ' ' << fixed(report.row(model, r).mean_psnr) << " |";
    for (double r : report.r_values) out << ' ' << fixed(report.row(model, r).mean_ssim) << " |";
    out << '\n';
  }
}

inline Manifest benchmark_manifest(const ExperimentConfig& config) {
  Manifest m;
  m.set("experiment", "input_image", config.input_image);
  m.set("experiment", "image_name", config.resolved_image_name());
  std::string rs;
  for (double r : config.r_values) rs += (rs.empty() ? "" : ", ") + format_number(r);
  m.set("experiment", "r_values", rs);
  m.set("experiment", "trials", static_cast<std::uint64_t>(config.trials));
  std::string ms;
  for (auto model : config.models) ms += (ms.empty() ? "" : ", ") + key_name(model);
  m.set("experiment", "models", ms);
  m.set("experiment", "base_seed", config.base_seed);
  m.set("experiment", "seed_rule", "base_seed + r_index * trials + trial");
  m.set("experiment", "peak", config.peak);
  m.set("experiment", "clip_before_score", config.clip_before_score);
  record_blur(m, config.blur);
  SolverConfig solver = config.solver;
  record_solver(m, solver);
  m.set("solver", "model", "per row");
  m.set("solver", "r", "per row");
  return m;
}

/// Writes trials.csv, summary.csv, table.md and manifest.ini into output_dir.
inline void write_benchmark_outputs(const BenchmarkReport& report, const ExperimentConfig& config,
                                    const std::filesystem::path& output_dir) {
  std::filesystem::create_directories(output_dir);
  auto open = [&](const char* name) {
    std::ofstream out(output_dir / name, std::ios::binary);
    if (!out) throw IoError("cannot write '" + (output_dir / name).string() + "'");
    return out;
  };
  {
    auto out = open("trials.csv");
    write_trials_csv(report, out);
  }
  {
    auto out = open("summary.csv");
    write_summary_csv(report, out);
  }
  {
    auto out = open("table.md");
    write_markdown_table(report, out);
  }
  benchmark_manifest(config).write(output_dir / "manifest.ini");
}

}  // namespace nbaitv
