#include "btsynth/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>

#include "btsynth/planner.hpp"
#include "btsynth/text.hpp"

namespace btsynth {

namespace {

std::string format_fitness(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// The summary aggregates the values exactly as they appear in the per-run
// CSVs, so reading those files back reproduces it to within 1e-9.
double printed_value(double v) { return std::stod(format_fitness(v)); }

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') {
      out += "\"\"";
    } else {
      out += c;
    }
  }
  out += '"';
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << body;
}

}  // namespace

int generations_for(const TaskSpec& task, VariantMode variant) {
  const bool boosted = variant == VariantMode::BaselineBoostCrossover ||
                       variant == VariantMode::BaselineBoostAll;
  if (boosted && task.boosted_generations) {
    return *task.boosted_generations;
  }
  return task.default_generations;
}

int max_new_episodes_per_generation(const GpParams& gp) {
  return gp.mutation_parents * gp.mutation_offspring_per_parent +
         gp.crossover_parents * gp.crossover_offspring_per_parent;
}

std::string curve_csv(const EvolutionTrace& trace) {
  std::string out = "generation,episodes,best_fitness,mean_fitness,best_tree\n";
  for (const auto& row : trace.rows) {
    out += std::to_string(row.generation);
    out += ',';
    out += std::to_string(row.episodes);
    out += ',';
    out += format_fitness(row.best_fitness);
    out += ',';
    out += format_fitness(row.mean_fitness);
    out += ',';
    out += csv_quote(row.best_tree);
    out += '\n';
  }
  return out;
}

std::string summary_csv(const std::vector<RunRecord>& records) {
  // variant -> generation -> best fitnesses across seeds
  std::map<std::string, std::map<int, std::vector<double>>> grouped;
  std::map<std::string, std::map<int, std::vector<double>>> episodes;
  for (const auto& rec : records) {
    auto& g = grouped[to_string(rec.variant)];
    auto& e = episodes[to_string(rec.variant)];
    for (const auto& row : rec.trace.rows) {
      g[row.generation].push_back(printed_value(row.best_fitness));
      e[row.generation].push_back(static_cast<double>(row.episodes));
    }
  }
  std::string out =
      "variant,generation,mean_episodes,mean_best_fitness,std_best_fitness\n";
  for (const auto& [variant, by_gen] : grouped) {
    for (const auto& [gen, values] : by_gen) {
      double mean = 0;
      for (double v : values) {
        mean += v;
      }
      mean /= static_cast<double>(values.size());
      double var = 0;
      for (double v : values) {
        var += (v - mean) * (v - mean);
      }
      var /= static_cast<double>(values.size());
      double ep_mean = 0;
      for (double v : episodes[variant][gen]) {
        ep_mean += v;
      }
      ep_mean /= static_cast<double>(episodes[variant][gen].size());
      out += variant;
      out += ',';
      out += std::to_string(gen);
      out += ',';
      out += format_fitness(ep_mean);
      out += ',';
      out += format_fitness(mean);
      out += ',';
      out += format_fitness(std::sqrt(var));
      out += '\n';
    }
  }
  return out;
}

RunRecord run_single(const TaskBundle& bundle, VariantMode variant,
                     std::uint32_t seed, int generations, int jobs) {
  std::optional<BehaviorTree> baseline;
  if (uses_baseline(variant)) {
    baseline = plan(bundle.task, bundle.action_models, bundle.goals);
  }
  const auto start = std::chrono::steady_clock::now();
  EvolutionTrace trace = run_evolution(bundle.gp, bundle.task, variant, seed,
                                       generations, baseline, jobs);
  const auto end = std::chrono::steady_clock::now();

  RunRecord rec;
  rec.task = bundle.task.name;
  rec.variant = variant;
  rec.seed = seed;
  rec.generations = generations;
  // Maximum possible unique episodes: the initial population plus the
  // per-generation offspring budget.
  const double max_possible =
      static_cast<double>(bundle.gp.population_size) +
      static_cast<double>(max_new_episodes_per_generation(bundle.gp)) *
          static_cast<double>(generations);
  rec.unique_episode_ratio =
      static_cast<double>(trace.rows.back().episodes) / max_possible;
  rec.elapsed_seconds =
      std::chrono::duration<double>(end - start).count();
  rec.trace = std::move(trace);
  return rec;
}

std::string default_out_dir() {
  if (const char* env = std::getenv("BTSYNTH_OUT_DIR")) {
    return env;
  }
  return "results";
}

std::vector<RunRecord> run_experiment(const ExperimentPlan& plan_spec) {
  namespace fs = std::filesystem;
  const TaskBundle bundle = load_task(plan_spec.task);
  const fs::path out_dir = plan_spec.out_dir;
  fs::create_directories(out_dir);

  const std::vector<std::uint32_t>& seeds =
      plan_spec.seeds.empty() ? bundle.task.default_seeds : plan_spec.seeds;
  if (seeds.empty()) {
    throw ConfigError("no seeds given and the task declares no defaults");
  }

  std::optional<BehaviorTree> planned;
  const bool any_seeded =
      std::any_of(plan_spec.variants.begin(), plan_spec.variants.end(),
                  [](VariantMode v) { return uses_baseline(v); });
  if (any_seeded) {
    planned = plan(bundle.task, bundle.action_models, bundle.goals);
    write_file(out_dir / ("planned_" + bundle.task.name + ".dot"),
               to_dot(*planned));
  }

  std::vector<RunRecord> records;
  for (VariantMode variant : plan_spec.variants) {
    const int generations = plan_spec.generations_override > 0
                                ? plan_spec.generations_override
                                : generations_for(bundle.task, variant);
    for (std::uint32_t seed : seeds) {
      RunRecord rec =
          run_single(bundle, variant, seed, generations, plan_spec.jobs);
      const std::string stem = bundle.task.name + "_" +
                               to_string(rec.variant) + "_" +
                               std::to_string(seed);
      write_file(out_dir / (stem + ".csv"), curve_csv(rec.trace));
      write_file(out_dir / ("best_" + stem + ".dot"),
                 to_dot(rec.trace.best.tree));
      records.push_back(std::move(rec));
    }
  }
  write_file(out_dir / (bundle.task.name + "_summary.csv"),
             summary_csv(records));
  return records;
}

}  // namespace btsynth
