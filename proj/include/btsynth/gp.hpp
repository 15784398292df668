#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "btsynth/rng.hpp"
#include "btsynth/sim.hpp"
#include "btsynth/task.hpp"
#include "btsynth/tree.hpp"

namespace btsynth {

struct GpParams {
  int population_size = 16;
  int initial_tree_size = 8;
  int mutation_parents = 8;
  int mutation_offspring_per_parent = 2;
  double p_add = 0.40;
  double p_delete = 0.30;
  double p_change = 0.30;
  int crossover_parents = 8;
  int crossover_offspring_per_parent = 2;
  int elites = 2;
  double control_node_prob = 0.50;
  int max_resample_attempts = 100;
  // Prefer structurally distinct survivors when filling the population;
  // drawn duplicates only stay when nothing distinct is left. Guards
  // against collapse into sixteen copies of one tree, which starves the
  // crossover operator of material.
  bool distinct_survivors = true;

  void check() const;  // throws ConfigError on inconsistent values
};

struct Individual {
  BehaviorTree tree;
  std::optional<double> fitness;
  bool is_baseline = false;
  std::uint64_t id = 0;  // creation order; older individuals win fitness ties
};

enum class VariantMode : std::uint8_t {
  Scratch,
  Baseline,
  BaselineBoostCrossover,
  BaselineBoostAll,
};

const char* to_string(VariantMode v);
std::optional<VariantMode> variant_from_string(std::string_view name);
inline bool uses_baseline(VariantMode v) { return v != VariantMode::Scratch; }

enum class MutationKind : std::uint8_t { Add, Delete, Change };

/// Grows a valid tree of exactly `size` nodes (size >= 2) by repeated
/// random insertion: each step adds a leaf, or a control node that
/// immediately receives two random leaf children. Insertions that would
/// break a constraint are resampled.
BehaviorTree random_tree(Rng& rng, const std::vector<BehaviorId>& pool,
                         int size, const GpParams& params);

/// One structural mutation: add / delete / change with the configured
/// probabilities. Internal choices are resampled until the result is
/// valid; the drawn kind is only abandoned when no valid application of it
/// exists. Returns the applied kind alongside the new tree.
std::pair<BehaviorTree, MutationKind> mutate(const BehaviorTree& tree,
                                             Rng& rng,
                                             const std::vector<BehaviorId>& pool,
                                             const GpParams& params);

/// Copies a uniformly random subtree of `donor` (any node, including
/// single leaves or the whole tree) into a random slot of `recipient`.
/// Not a swap; the recipient keeps all of its own nodes. Degenerate pairs
/// with no valid insertion yield an unchanged copy of the recipient.
BehaviorTree crossover_insert(const BehaviorTree& recipient,
                              const BehaviorTree& donor, Rng& rng,
                              const GpParams& params);

enum class BoostMode : std::uint8_t { None, Baseline };

/// Rank-proportional sampling without replacement. Individuals are ranked
/// by fitness (ties broken older-first); rank i carries weight N - i.
/// With BoostMode::Baseline the baseline individual is ranked directly
/// after the true best regardless of its own fitness.
std::vector<const Individual*> rank_select(
    const std::vector<Individual>& population, int count, Rng& rng,
    BoostMode boost);

/// Memoized fitness evaluation: one episode per distinct canonical tree.
class CachedEvaluator {
 public:
  explicit CachedEvaluator(const TaskSpec& task, int jobs = 1)
      : task_(task), jobs_(jobs) {}

  double evaluate(const BehaviorTree& tree);

  /// Evaluates a batch, deduplicating by canonical form. Cache misses are
  /// counted in first-occurrence order before any evaluation starts, so
  /// the unique-episode statistic does not depend on the job count.
  std::vector<double> evaluate_batch(const std::vector<BehaviorTree>& trees);

  std::uint64_t unique_episodes() const { return unique_episodes_; }
  std::uint64_t episodes_run() const { return episodes_run_; }
  const TaskSpec& task() const { return task_; }
  void set_jobs(int jobs) { jobs_ = jobs; }

 private:
  const TaskSpec& task_;
  int jobs_;
  std::unordered_map<std::string, double> cache_;
  std::uint64_t unique_episodes_ = 0;
  std::uint64_t episodes_run_ = 0;
};

struct TraceRow {
  int generation = 0;
  std::uint64_t episodes = 0;  // cumulative unique episodes so far
  double best_fitness = 0;
  double mean_fitness = 0;
  std::string best_tree;  // canonical text
};

struct EvolutionTrace {
  std::vector<TraceRow> rows;
  Individual best;
};

/// One generation: mutation offspring, insertion-crossover offspring,
/// batch evaluation of unseen trees, elitist survivor selection over
/// parents plus offspring, and forced reinsertion of the baseline for the
/// seeded variants. All randomness is drawn from `rng` in a fixed order.
std::vector<Individual> evolve_generation(const std::vector<Individual>& pop,
                                          const GpParams& params,
                                          VariantMode variant,
                                          CachedEvaluator& evaluator, Rng& rng,
                                          std::uint64_t& next_id);

/// Full run: random initial population (the baseline replacing one random
/// member for seeded variants), `generations` rounds of evolve_generation,
/// and a per-generation trace keyed by cumulative unique episodes.
EvolutionTrace run_evolution(const GpParams& params, const TaskSpec& task,
                             VariantMode variant, std::uint64_t seed,
                             int generations,
                             const std::optional<BehaviorTree>& baseline,
                             int jobs = 1);

}  // namespace btsynth
