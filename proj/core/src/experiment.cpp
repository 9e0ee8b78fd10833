#include "insideout/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "insideout/serialization.hpp"

namespace insideout {

namespace {

constexpr std::uint64_t kSpecPurpose = 0;
constexpr std::uint64_t kModelPurpose = 2;
constexpr std::uint64_t kBaselinePurpose = 3;
constexpr std::uint64_t kCompositionPurpose = 4;

struct Task {
  std::size_t config_index = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  HyperRanges ranges{};
  std::vector<Composition> compositions;
};

struct RepetitionResult {
  std::vector<double> nrmse;  // per task composition
  std::size_t discarded = 0;
  std::size_t dropped = 0;
};

/// Serializes sink calls from worker threads.
class Reporter {
 public:
  explicit Reporter(const ProgressSink& sink) : sink_(sink) {}
  void warn(const std::string& message) {
    if (!sink_) return;
    std::lock_guard lock(mutex_);
    sink_(message);
  }

 private:
  const ProgressSink& sink_;
  std::mutex mutex_;
};

bool regenerable(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateGap:
    case ErrorCode::ZeroBaseline:
    case ErrorCode::SpecGenerationFailed:
    case ErrorCode::RejectionBudgetExceeded: return true;
    default: return false;
  }
}

struct EvalOutcome {
  double rmse = 0.0;
  std::size_t dropped = 0;
};

RepetitionResult run_repetition(const ExperimentConfig& cfg, const Task& task,
                                std::size_t repetition, Reporter& reporter) {
  RepetitionResult out;
  for (std::size_t attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    auto stream = [&](std::uint64_t purpose) {
      return RandomStream::derive(cfg.master_seed,
                                  {task.config_index, repetition, attempt, purpose});
    };
    try {
      auto spec_rng = stream(kSpecPurpose);
      ScreenOptions screen;
      screen.k_neighbors = cfg.k_neighbors;
      screen.mode = cfg.mode;
      screen.tree_depth = cfg.tree_depth;
      screen.tree = cfg.tree;
      const ScreenedDataset screened =
          draw_screened_dataset(task.n, task.k, task.ranges, spec_rng, screen);
      const DatasetSpec& spec = screened.spec;
      const auto& profilers = screened.profilers;
      auto model_rng = stream(kModelPurpose);
      const RegressionModel model = fit_best(screened.data, model_rng, cfg.fit);
      const ProfileOptions options{cfg.mode, 0, cfg.k_neighbors, screened.detector_seed};

      const auto max_drops = static_cast<std::size_t>(
          std::floor(cfg.max_drop_rate * static_cast<double>(cfg.eval_samples)));
      auto evaluate = [&](const Composition& c, RandomStream rng) -> std::optional<EvalOutcome> {
        const Profile desired = composition_profile(c);
        std::vector<double> predictions;
        std::vector<double> truth;
        std::size_t dropped = 0;
        for (std::size_t s = 0; s < cfg.eval_samples; ++s) {
          auto x = draw_certified_sample(spec.features, profilers, desired, options, rng,
                                         cfg.max_redraws);
          if (!x) {
            if (++dropped > max_drops) return std::nullopt;
            continue;
          }
          truth.push_back(spec.target_tree.evaluate(*x) + spec.target_noise_sigma * rng.normal());
          predictions.push_back(predict(model, *x));
        }
        return EvalOutcome{rmse(predictions, truth), dropped};
      };

      const auto baseline = evaluate(Composition{task.n, 0, 0}, stream(kBaselinePurpose));
      if (!baseline) {
        reporter.warn(fmt::format("config {} repetition {} attempt {}: baseline drop rate too "
                                  "high, regenerating",
                                  task.config_index, repetition, attempt));
        ++out.discarded;
        continue;
      }
      std::vector<double> values;
      std::size_t dropped = baseline->dropped;
      bool discarded = false;
      for (const auto& c : task.compositions) {
        if (c.no == task.n) {
          values.push_back(normalized_rmse(baseline->rmse, baseline->rmse));
          continue;
        }
        const auto purpose = kCompositionPurpose + c.inside * (task.n + 1) + c.outside;
        const auto result = evaluate(c, stream(purpose));
        if (!result) {
          reporter.warn(fmt::format("config {} repetition {} attempt {}: composition "
                                    "({},{},{}) drop rate too high, regenerating",
                                    task.config_index, repetition, attempt, c.no, c.inside,
                                    c.outside));
          discarded = true;
          break;
        }
        dropped += result->dropped;
        values.push_back(normalized_rmse(result->rmse, baseline->rmse));
      }
      if (discarded) {
        ++out.discarded;
        continue;
      }
      if (dropped > 0) {
        reporter.warn(fmt::format("config {} repetition {}: dropped {} uncertifiable samples",
                                  task.config_index, repetition, dropped));
      }
      out.nrmse = std::move(values);
      out.dropped = dropped;
      return out;
    } catch (const Error& e) {
      if (!regenerable(e.code())) throw;
      reporter.warn(fmt::format("config {} repetition {} attempt {}: {}, regenerating",
                                task.config_index, repetition, attempt, e.what()));
      ++out.discarded;
    }
  }
  fail(ErrorCode::BudgetExhausted,
       fmt::format("config {} repetition {}: no usable dataset after {} attempts",
                   task.config_index, repetition, cfg.max_attempts));
}

/// One output row drawn from task `task` composition `composition`.
struct RowPlan {
  std::size_t task = 0;
  std::size_t composition = 0;
  std::optional<double> sweep_x;
  std::optional<double> sweep_y;
  bool present = true;
  Composition absent_composition{};
};

ExperimentResult execute(std::string name, const ExperimentConfig& cfg,
                         const std::vector<Task>& tasks, const std::vector<RowPlan>& plans,
                         const ProgressSink& sink) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  Reporter reporter(sink);
  const std::size_t units = tasks.size() * cfg.repetitions;
  std::vector<RepetitionResult> results(units);
  parallel_for(units, cfg.jobs, [&](std::size_t u) {
    results[u] = run_repetition(cfg, tasks[u / cfg.repetitions], u % cfg.repetitions, reporter);
  });

  ExperimentResult out;
  out.experiment = std::move(name);
  out.config = cfg;
  for (const auto& r : results) {
    out.regenerated += r.discarded;
    out.dropped_samples += r.dropped;
  }
  for (const auto& plan : plans) {
    ResultRow row;
    row.sweep_x = plan.sweep_x;
    row.sweep_y = plan.sweep_y;
    row.present = plan.present;
    if (!plan.present) {
      row.composition = plan.absent_composition;
      out.rows.push_back(std::move(row));
      continue;
    }
    row.composition = tasks[plan.task].compositions[plan.composition];
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
      row.values.push_back(results[plan.task * cfg.repetitions + rep].nrmse[plan.composition]);
    }
    const Aggregate agg = aggregate(row.values);
    row.mean_nrmse = agg.mean;
    row.std_nrmse = agg.stddev;
    row.repetitions_used = row.values.size();
    out.rows.push_back(std::move(row));
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

Task make_task(std::size_t index, std::size_t n, std::size_t k, const HyperRanges& ranges,
               std::vector<Composition> compositions) {
  return Task{index, n, k, ranges, std::move(compositions)};
}

std::vector<Composition> mixed_only(std::size_t n) { return {mixed_composition(n)}; }

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  require(n >= 1, ErrorCode::InvalidArgument, "n must be >= 1");
  require(k >= 20, ErrorCode::InvalidArgument, fmt::format("k must be >= 20 (got {})", k));
  require(repetitions >= 1, ErrorCode::InvalidArgument, "repetitions must be >= 1");
  require(eval_samples >= 1, ErrorCode::InvalidArgument, "eval_samples must be >= 1");
  require(k_neighbors >= 1, ErrorCode::InvalidArgument, "k_neighbors must be >= 1");
  require(tree_depth >= 1, ErrorCode::InvalidArgument, "tree_depth must be >= 1");
  require(max_attempts >= 1, ErrorCode::InvalidArgument, "max_attempts must be >= 1");
  require(max_redraws >= 1, ErrorCode::InvalidArgument, "max_redraws must be >= 1");
  require(max_drop_rate >= 0.0 && max_drop_rate < 1.0, ErrorCode::InvalidArgument,
          "max_drop_rate must be in [0, 1)");
  ranges.validate();
}

std::vector<Composition> enumerate_compositions(std::size_t n) {
  std::vector<Composition> out;
  out.reserve((n + 1) * (n + 2) / 2);
  for (std::size_t no = n + 1; no-- > 0;) {
    for (std::size_t inside = n - no + 1; inside-- > 0;) {
      out.push_back({no, inside, n - no - inside});
    }
  }
  return out;
}

Composition mixed_composition(std::size_t n) noexcept {
  const std::size_t half = n / 2;
  return {n - 2 * half, half, half};
}

Profile composition_profile(const Composition& c) {
  return Profile::from_counts(ProfileCounts{c.no, c.inside, c.outside});
}

namespace {

bool certifiable(const FeatureSpec& spec, const FeatureProfiler& profiler,
                 const ProfileOptions& options, const ScreenOptions& screen) {
  const auto& w = spec.window;
  const PlacementMargins m = placement_margins(w);
  auto fraction = [&](OODStatus status, double lo, double hi) {
    std::size_t hits = 0;
    for (std::size_t p = 0; p < screen.probes; ++p) {
      const double x = lo + (hi - lo) * (static_cast<double>(p) + 0.5) /
                                static_cast<double>(screen.probes);
      if (classify_feature(profiler, x, options) == status) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(screen.probes);
  };
  const double inside = fraction(OODStatus::Inside, w.b1() + m.inside, w.a2() - m.inside);
  if (inside < screen.min_certifiable) return false;
  const double below =
      fraction(OODStatus::Outside, w.a1() - m.outside_span, w.a1() - m.outside);
  const double above =
      fraction(OODStatus::Outside, w.b2() + m.outside, w.b2() + m.outside_span);
  return 0.5 * (below + above) >= screen.min_certifiable;
}

double open_uniform(RandomStream& rng, double lo, double hi) {
  double v = lo;
  while (v <= lo || v >= hi) v = rng.uniform(lo, hi);
  return v;
}

}  // namespace

ScreenedDataset draw_screened_dataset(std::size_t n, std::size_t k, const HyperRanges& ranges,
                                      RandomStream& rng, const ScreenOptions& screen) {
  require(n >= 1, ErrorCode::InvalidArgument, "n must be >= 1");
  require(screen.probes >= 1 && screen.max_feature_attempts >= 1, ErrorCode::InvalidArgument,
          "screening needs probes and attempts >= 1");
  ranges.validate();
  ScreenedDataset out;
  out.spec.n = n;
  out.spec.k = k;
  out.spec.seed = rng.next_u64();
  out.detector_seed = rng.next_u64();
  const ProfileOptions options{screen.mode, 0, screen.k_neighbors, out.detector_seed};
  std::vector<DetectorModel> detectors;
  for (std::size_t i = 0; i < n; ++i) {
    bool accepted = false;
    for (std::size_t attempt = 0; attempt < screen.max_feature_attempts && !accepted; ++attempt) {
      RandomStream feature_rng = rng.child(i * screen.max_feature_attempts + attempt);
      std::optional<FeatureSpec> spec;
      try {
        spec.emplace(random_feature_spec(feature_rng, ranges));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SpecGenerationFailed) throw;
        continue;
      }
      if (spec->window.gap() < 10.0 * spec->noise_sigma) continue;
      const auto column = generate_dataset_column(*spec, k, out.spec.seed, i);
      auto detector_rng = RandomStream::derive(out.detector_seed, {i});
      DetectorModel detector = fit_knn(column, std::min(screen.k_neighbors, k), detector_rng);
      const FeatureProfiler profiler(column, detector);
      if (!certifiable(*spec, profiler, options, screen)) continue;
      out.spec.features.push_back(std::move(*spec));
      detectors.push_back(std::move(detector));
      accepted = true;
    }
    require(accepted, ErrorCode::SpecGenerationFailed,
            fmt::format("feature {}: no certifiable spec in {} attempts", i,
                        screen.max_feature_attempts));
  }
  RandomStream target_rng = rng.child(n * screen.max_feature_attempts);
  out.spec.target_tree = random_expression_tree(n, target_rng, screen.tree_depth, screen.tree);
  out.spec.target_noise_sigma = open_uniform(target_rng, ranges.noise_lo, ranges.noise_hi);
  out.data = generate_dataset(out.spec);
  out.profilers.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.profilers.emplace_back(out.data.features.column(i), std::move(detectors[i]));
  }
  return out;
}

std::optional<Sample> draw_certified_sample(std::span<const FeatureSpec> specs,
                                            std::span<const FeatureProfiler> profilers,
                                            const Profile& desired,
                                            const ProfileOptions& options, RandomStream& rng,
                                            std::size_t max_redraws) {
  const auto& statuses = desired.statuses();
  require(specs.size() == statuses.size() && profilers.size() == statuses.size(),
          ErrorCode::DimensionMismatch,
          fmt::format("profile has {} features, specs {} and profilers {}", statuses.size(),
                      specs.size(), profilers.size()));
  Sample x(statuses.size());
  for (std::size_t i = 0; i < statuses.size(); ++i) {
    bool certified = false;
    for (std::size_t draw = 0; draw <= max_redraws && !certified; ++draw) {
      x[i] = sample_coordinate(specs[i], statuses[i], rng);
      certified = classify_feature(profilers[i], x[i], options) == statuses[i];
    }
    if (!certified) return std::nullopt;
  }
  return x;
}

ExperimentResult run_profile_grid(const ExperimentConfig& cfg, const ProgressSink& sink) {
  cfg.validate();
  std::vector<Task> tasks{make_task(0, cfg.n, cfg.k, cfg.ranges, enumerate_compositions(cfg.n))};
  std::vector<RowPlan> plans;
  for (std::size_t c = 0; c < tasks[0].compositions.size(); ++c) plans.push_back({0, c, std::nullopt, std::nullopt});
  return execute("profile", cfg, tasks, plans, sink);
}

ExperimentResult run_sweep_dimensions(const ExperimentConfig& cfg,
                                      std::span<const std::size_t> n_values,
                                      const ProgressSink& sink) {
  require(!n_values.empty(), ErrorCode::InvalidArgument, "n_values must not be empty");
  std::vector<Task> tasks;
  std::vector<RowPlan> plans;
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    require(n_values[i] >= 1, ErrorCode::InvalidArgument, "n values must be >= 1");
    tasks.push_back(make_task(i, n_values[i], cfg.k, cfg.ranges, mixed_only(n_values[i])));
    plans.push_back({i, 0, static_cast<double>(n_values[i]), std::nullopt});
  }
  return execute("sens-dim", cfg, tasks, plans, sink);
}

ExperimentResult run_sweep_complexity(const ExperimentConfig& cfg,
                                      std::span<const std::size_t> z_values,
                                      const ProgressSink& sink) {
  require(!z_values.empty(), ErrorCode::InvalidArgument, "z_values must not be empty");
  std::vector<Task> tasks;
  std::vector<RowPlan> plans;
  for (std::size_t i = 0; i < z_values.size(); ++i) {
    HyperRanges ranges = cfg.ranges;
    ranges.z_min = z_values[i];
    ranges.z_max = z_values[i];
    ranges.validate();
    tasks.push_back(make_task(i, cfg.n, cfg.k, ranges, mixed_only(cfg.n)));
    plans.push_back({i, 0, static_cast<double>(z_values[i]), std::nullopt});
  }
  return execute("sens-z", cfg, tasks, plans, sink);
}

ExperimentResult run_sweep_portion(const ExperimentConfig& cfg,
                                   std::span<const double> inside_fracs,
                                   std::span<const double> outside_fracs,
                                   const ProgressSink& sink) {
  require(!inside_fracs.empty() && !outside_fracs.empty(), ErrorCode::InvalidArgument,
          "portion grids must not be empty");
  const std::size_t n = cfg.n;
  Task task = make_task(0, n, cfg.k, cfg.ranges, {});
  std::vector<RowPlan> plans;
  for (double fi : inside_fracs) {
    for (double fo : outside_fracs) {
      require(fi >= 0.0 && fi <= 1.0 && fo >= 0.0 && fo <= 1.0, ErrorCode::InvalidArgument,
              "portion fractions must be in [0, 1]");
      const auto inside = static_cast<std::size_t>(std::floor(fi * static_cast<double>(n)));
      const auto outside = static_cast<std::size_t>(std::floor(fo * static_cast<double>(n)));
      RowPlan plan{0, 0, fi, fo};
      if (inside + outside > n) {
        plan.present = false;
        plan.absent_composition = {0, inside, outside};
        plans.push_back(plan);
        continue;
      }
      const Composition c{n - inside - outside, inside, outside};
      auto it = std::find(task.compositions.begin(), task.compositions.end(), c);
      if (it == task.compositions.end()) {
        task.compositions.push_back(c);
        it = task.compositions.end() - 1;
      }
      plan.composition = static_cast<std::size_t>(it - task.compositions.begin());
      plans.push_back(plan);
    }
  }
  return execute("sens-portion", cfg, {task}, plans, sink);
}

ExperimentResult run_sweep_size(const ExperimentConfig& cfg,
                                std::span<const std::size_t> n_values,
                                std::span<const std::size_t> k_values,
                                const ProgressSink& sink) {
  require(!n_values.empty() && !k_values.empty(), ErrorCode::InvalidArgument,
          "size grids must not be empty");
  std::vector<Task> tasks;
  std::vector<RowPlan> plans;
  for (std::size_t n : n_values) {
    for (std::size_t k : k_values) {
      require(n >= 1 && k >= 20, ErrorCode::InvalidArgument,
              "size grid needs n >= 1 and k >= 20");
      const std::size_t index = tasks.size();
      tasks.push_back(make_task(index, n, k, cfg.ranges, mixed_only(n)));
      plans.push_back({index, 0, static_cast<double>(n), static_cast<double>(k)});
    }
  }
  return execute("sens-size", cfg, tasks, plans, sink);
}

Aggregate aggregate(std::span<const double> records) {
  require(!records.empty(), ErrorCode::EmptyInput, "aggregate needs at least one record");
  const double m = static_cast<double>(records.size());
  const double mean = std::accumulate(records.begin(), records.end(), 0.0) / m;
  double ss = 0.0;
  for (double r : records) ss += (r - mean) * (r - mean);
  return {mean, std::sqrt(ss / m)};
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorCode::LengthMismatch, "spearman needs equal lengths");
  require(x.size() >= 2, ErrorCode::InsufficientData, "spearman needs at least two pairs");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::string results_to_csv(const ExperimentResult& result) {
  const std::string config = csv_quote(experiment_config_to_json(result.config));
  std::string out =
      "experiment,config_json,n_no,n_inside,n_outside,sweep_x,sweep_y,mean_nrmse,std_nrmse,"
      "repetitions_used\n";
  for (const auto& row : result.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", result.experiment, config,
                       row.composition.no, row.composition.inside, row.composition.outside,
                       row.sweep_x ? format_double(*row.sweep_x) : "",
                       row.sweep_y ? format_double(*row.sweep_y) : "",
                       row.present ? format_double(row.mean_nrmse) : "",
                       row.present ? format_double(row.std_nrmse) : "", row.repetitions_used);
  }
  return out;
}

void write_results_csv(const ExperimentResult& result, const std::filesystem::path& path) {
  std::ofstream file(path, std::ios::binary);
  require(static_cast<bool>(file), ErrorCode::IoError,
          fmt::format("cannot open '{}' for writing", path.string()));
  file << results_to_csv(result);
  require(static_cast<bool>(file), ErrorCode::IoError,
          fmt::format("failed writing '{}'", path.string()));
}

void write_manifest(const ExperimentResult& result, const std::filesystem::path& path) {
  nlohmann::ordered_json manifest;
  manifest["experiment"] = result.experiment;
  manifest["master_seed"] = result.config.master_seed;
  manifest["config"] = nlohmann::ordered_json::parse(experiment_config_to_json(result.config));
  manifest["artifact_version"] = INSIDEOUT_VERSION;
  manifest["format_version"] = kFormatVersion;
  manifest["wall_seconds"] = result.wall_seconds;
  manifest["jobs"] = result.config.jobs;
  manifest["rows"] = result.rows.size();
  manifest["regenerated_datasets"] = result.regenerated;
  manifest["dropped_samples"] = result.dropped_samples;
  std::ofstream file(path, std::ios::binary);
  require(static_cast<bool>(file), ErrorCode::IoError,
          fmt::format("cannot open '{}' for writing", path.string()));
  file << manifest.dump(2) << '\n';
  require(static_cast<bool>(file), ErrorCode::IoError,
          fmt::format("failed writing '{}'", path.string()));
}

void parallel_for(std::size_t count, std::size_t jobs,
                  const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace insideout
