#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "btsynth/config.hpp"
#include "btsynth/gp.hpp"

namespace btsynth {

struct ExperimentPlan {
  std::string task;  // name or config path
  std::vector<VariantMode> variants;
  std::vector<std::uint32_t> seeds;  // empty = task defaults
  int generations_override = 0;      // 0 = task defaults (boosted-aware)
  std::string out_dir = "results";
  int jobs = 1;
};

struct RunRecord {
  std::string task;
  VariantMode variant = VariantMode::Scratch;
  std::uint32_t seed = 0;
  int generations = 0;
  EvolutionTrace trace;
  double unique_episode_ratio = 0.0;  // unique episodes / (32 * generations)
  double elapsed_seconds = 0.0;
};

/// Generations a variant runs for under this task's defaults.
int generations_for(const TaskSpec& task, VariantMode variant);

/// Theoretical per-generation maximum of new unique episodes.
int max_new_episodes_per_generation(const GpParams& gp);

/// Per-run learning curve CSV:
/// `generation,episodes,best_fitness,mean_fitness,best_tree`, one row per
/// generation including generation 0, fitness with six decimals.
std::string curve_csv(const EvolutionTrace& trace);

/// Aggregate CSV with mean and (population) standard deviation of best
/// fitness per generation across seeds, grouped by variant.
std::string summary_csv(const std::vector<RunRecord>& records);

/// Runs one (variant, seed) evolution for a loaded task, planning the
/// baseline when the variant needs one.
RunRecord run_single(const TaskBundle& bundle, VariantMode variant,
                     std::uint32_t seed, int generations, int jobs);

/// Executes the full plan and writes per-run CSV/DOT files, the planned
/// tree's DOT (for seeded variants), and the summary CSV.
std::vector<RunRecord> run_experiment(const ExperimentPlan& plan);

/// Default output directory; the BTSYNTH_OUT_DIR environment variable
/// overrides it.
std::string default_out_dir();

}  // namespace btsynth
