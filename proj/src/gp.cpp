#include "btsynth/gp.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>

#include "btsynth/text.hpp"

namespace btsynth {

void GpParams::check() const {
  if (population_size < 2 || initial_tree_size < 2) {
    throw ConfigError("population_size and initial_tree_size must be >= 2");
  }
  if (std::abs(p_add + p_delete + p_change - 1.0) > 1e-9) {
    throw ConfigError("mutation probabilities must sum to 1");
  }
  if (elites < 0 || elites >= population_size) {
    throw ConfigError("elites must be in [0, population_size)");
  }
  if (mutation_parents < 1 || mutation_parents > population_size ||
      crossover_parents < 1 || crossover_parents > population_size) {
    throw ConfigError("parent counts must be in [1, population_size]");
  }
  if (crossover_parents % 2 != 0) {
    throw ConfigError("crossover_parents must be even (parents are paired)");
  }
  if (mutation_offspring_per_parent < 1 || crossover_offspring_per_parent < 1) {
    throw ConfigError("offspring counts must be >= 1");
  }
  if (control_node_prob < 0.0 || control_node_prob > 1.0) {
    throw ConfigError("control_node_prob must be in [0, 1]");
  }
  if (max_resample_attempts < 1) {
    throw ConfigError("max_resample_attempts must be >= 1");
  }
}

const char* to_string(VariantMode v) {
  switch (v) {
    case VariantMode::Scratch:
      return "scratch";
    case VariantMode::Baseline:
      return "baseline";
    case VariantMode::BaselineBoostCrossover:
      return "baseline-boost-crossover";
    case VariantMode::BaselineBoostAll:
      return "baseline-boost-all";
  }
  return "?";
}

std::optional<VariantMode> variant_from_string(std::string_view name) {
  if (name == "scratch") {
    return VariantMode::Scratch;
  }
  if (name == "baseline") {
    return VariantMode::Baseline;
  }
  if (name == "baseline-boost-crossover") {
    return VariantMode::BaselineBoostCrossover;
  }
  if (name == "baseline-boost-all") {
    return VariantMode::BaselineBoostAll;
  }
  return std::nullopt;
}

namespace {

const BehaviorId& random_pool_behavior(Rng& rng,
                                       const std::vector<BehaviorId>& pool) {
  return pool[rng.uniform_index(pool.size())];
}

NodeKind random_control_kind(Rng& rng) {
  return rng.uniform_index(2) == 0 ? NodeKind::Fallback : NodeKind::Sequence;
}

}  // namespace

BehaviorTree random_tree(Rng& rng, const std::vector<BehaviorId>& pool,
                         int size, const GpParams& params) {
  if (size < 2 || pool.empty()) {
    throw ConfigError("random_tree needs size >= 2 and a nonempty pool");
  }
  BehaviorTree t;
  const int leaf = add_leaf(t, random_pool_behavior(rng, pool));
  t.root = add_control(t, random_control_kind(rng), {leaf});
  int count = 2;

  while (count < size) {
    const int remaining = size - count;
    bool inserted = false;
    for (int attempt = 0; attempt < params.max_resample_attempts; ++attempt) {
      const bool want_control =
          remaining >= 3 && rng.chance(params.control_node_prob);
      const auto slots = insertion_slots(t);
      const auto [parent, pos] = slots[rng.uniform_index(slots.size())];
      BehaviorTree cand =
          want_control
              ? with_control_inserted(t, parent, pos, random_control_kind(rng),
                                      random_pool_behavior(rng, pool),
                                      random_pool_behavior(rng, pool))
              : with_leaf_inserted(t, parent, pos,
                                   random_pool_behavior(rng, pool));
      if (is_valid(cand)) {
        t = std::move(cand);
        count += want_control ? 3 : 1;
        inserted = true;
        break;
      }
    }
    if (!inserted) {
      throw ConfigError("random tree growth exhausted resample attempts");
    }
  }
  return t;
}

namespace {

std::optional<BehaviorTree> try_add(const BehaviorTree& tree, Rng& rng,
                                    const std::vector<BehaviorId>& pool,
                                    const GpParams& params) {
  const bool control = rng.chance(params.control_node_prob);
  const auto slots = insertion_slots(tree);
  const auto [parent, pos] = slots[rng.uniform_index(slots.size())];
  BehaviorTree cand =
      control ? with_control_inserted(tree, parent, pos,
                                      random_control_kind(rng),
                                      random_pool_behavior(rng, pool),
                                      random_pool_behavior(rng, pool))
              : with_leaf_inserted(tree, parent, pos,
                                   random_pool_behavior(rng, pool));
  if (is_valid(cand)) {
    return cand;
  }
  return std::nullopt;
}

std::optional<BehaviorTree> try_delete(const BehaviorTree& tree, Rng& rng) {
  std::vector<int> nodes = subtree_of(tree, tree.root);
  std::erase(nodes, tree.root);
  if (nodes.empty()) {
    return std::nullopt;
  }
  const int target = nodes[rng.uniform_index(nodes.size())];
  auto cand = with_subtree_deleted(tree, target);
  if (cand && is_valid(*cand)) {
    return cand;
  }
  return std::nullopt;
}

std::optional<BehaviorTree> try_change(const BehaviorTree& tree, Rng& rng,
                                       const std::vector<BehaviorId>& pool,
                                       const GpParams& params) {
  const auto nodes = subtree_of(tree, tree.root);
  const int target = nodes[rng.uniform_index(nodes.size())];
  const bool to_control = rng.chance(params.control_node_prob);
  BehaviorTree cand;
  if (to_control) {
    const NodeKind kind = random_control_kind(rng);
    cand = is_control(tree.at(target).kind)
               ? with_control_kind_changed(tree, target, kind)
               : with_leaf_replaced_by_control(
                     tree, target, kind, random_pool_behavior(rng, pool),
                     random_pool_behavior(rng, pool));
  } else {
    cand = with_node_replaced_by_leaf(tree, target,
                                      random_pool_behavior(rng, pool));
  }
  if (is_valid(cand)) {
    return cand;
  }
  return std::nullopt;
}

}  // namespace

std::pair<BehaviorTree, MutationKind> mutate(const BehaviorTree& tree,
                                             Rng& rng,
                                             const std::vector<BehaviorId>& pool,
                                             const GpParams& params) {
  assert(is_valid(tree));
  const double r = rng.uniform01();
  MutationKind drawn = r < params.p_add
                           ? MutationKind::Add
                           : (r < params.p_add + params.p_delete
                                  ? MutationKind::Delete
                                  : MutationKind::Change);

  // The drawn kind is retried until it succeeds; only a kind with no valid
  // application on this tree (e.g. delete on a single-path tree) falls
  // through to the others.
  std::vector<MutationKind> order{drawn};
  for (MutationKind k :
       {MutationKind::Add, MutationKind::Delete, MutationKind::Change}) {
    if (k != drawn) {
      order.push_back(k);
    }
  }
  for (MutationKind k : order) {
    for (int attempt = 0; attempt < params.max_resample_attempts; ++attempt) {
      std::optional<BehaviorTree> cand;
      switch (k) {
        case MutationKind::Add:
          cand = try_add(tree, rng, pool, params);
          break;
        case MutationKind::Delete:
          cand = try_delete(tree, rng);
          break;
        case MutationKind::Change:
          cand = try_change(tree, rng, pool, params);
          break;
      }
      if (cand) {
        return {std::move(*cand), k};
      }
    }
  }
  throw std::runtime_error("mutation exhausted every operator");
}

BehaviorTree crossover_insert(const BehaviorTree& recipient,
                              const BehaviorTree& donor, Rng& rng,
                              const GpParams& params) {
  assert(is_valid(recipient) && is_valid(donor));
  // Donor subtrees range from whole branches to single leaves; the class
  // split mirrors the 50% control / 50% leaf node sampling used
  // elsewhere, so branch-sized donations stay common even in leaf-heavy
  // donors.
  std::vector<int> donor_controls;
  std::vector<int> donor_leaves;
  for (int idx : subtree_of(donor, donor.root)) {
    if (is_control(donor.at(idx).kind)) {
      donor_controls.push_back(idx);
    } else {
      donor_leaves.push_back(idx);
    }
  }
  const auto slots = insertion_slots(recipient);
  for (int attempt = 0; attempt < params.max_resample_attempts; ++attempt) {
    const bool from_controls =
        !donor_controls.empty() &&
        (donor_leaves.empty() || rng.chance(params.control_node_prob));
    const auto& candidates = from_controls ? donor_controls : donor_leaves;
    const int dn = candidates[rng.uniform_index(candidates.size())];
    const auto [parent, pos] = slots[rng.uniform_index(slots.size())];
    BehaviorTree cand = with_subtree_inserted(recipient, parent, pos, donor, dn);
    if (is_valid(cand)) {
      return cand;
    }
  }
  // Degenerate convergent pair with no legal insertion: keep the recipient.
  return clone(recipient);
}

namespace {

std::vector<const Individual*> rank_order(
    const std::vector<const Individual*>& individuals, BoostMode boost) {
  const Individual* baseline = nullptr;
  std::vector<const Individual*> order;
  order.reserve(individuals.size());
  for (const Individual* ind : individuals) {
    assert(ind->fitness.has_value());
    if (boost == BoostMode::Baseline && ind->is_baseline &&
        baseline == nullptr) {
      baseline = ind;
      continue;
    }
    order.push_back(ind);
  }
  std::sort(order.begin(), order.end(),
            [](const Individual* a, const Individual* b) {
              if (*a->fitness != *b->fitness) {
                return *a->fitness > *b->fitness;
              }
              return a->id < b->id;
            });
  if (baseline != nullptr) {
    // Effective fitness equals the best of the rest; the tie goes to the
    // true best, so the baseline lands directly behind it.
    const std::size_t pos = order.empty() ? 0 : 1;
    order.insert(order.begin() + static_cast<std::ptrdiff_t>(pos), baseline);
  }
  return order;
}

std::vector<const Individual*> rank_select_ptrs(
    const std::vector<const Individual*>& individuals, int count, Rng& rng,
    BoostMode boost) {
  assert(count >= 0 &&
         static_cast<std::size_t>(count) <= individuals.size());
  auto order = rank_order(individuals, boost);
  const std::size_t n = order.size();
  std::vector<std::uint64_t> weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    weights[i] = static_cast<std::uint64_t>(n - i);
  }
  std::vector<const Individual*> selected;
  selected.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const std::size_t idx = rng.weighted_index(weights);
    selected.push_back(order[idx]);
    order.erase(order.begin() + static_cast<std::ptrdiff_t>(idx));
    weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(idx));
  }
  return selected;
}

}  // namespace

std::vector<const Individual*> rank_select(
    const std::vector<Individual>& population, int count, Rng& rng,
    BoostMode boost) {
  std::vector<const Individual*> ptrs;
  ptrs.reserve(population.size());
  for (const auto& ind : population) {
    ptrs.push_back(&ind);
  }
  return rank_select_ptrs(ptrs, count, rng, boost);
}

double CachedEvaluator::evaluate(const BehaviorTree& tree) {
  const std::string key = serialize(tree);
  auto it = cache_.find(key);
  if (it != cache_.end()) {
    return it->second;
  }
  const EpisodeResult result = run_episode(tree, task_);
  const double fitness = compute_fitness(result, tree, task_);
  cache_.emplace(key, fitness);
  ++unique_episodes_;
  ++episodes_run_;
  return fitness;
}

std::vector<double> CachedEvaluator::evaluate_batch(
    const std::vector<BehaviorTree>& trees) {
  std::vector<std::string> keys;
  keys.reserve(trees.size());
  for (const auto& t : trees) {
    keys.push_back(serialize(t));
  }

  // Misses are identified (and counted) in first-occurrence order before
  // any evaluation runs, independent of the job count.
  std::vector<std::size_t> miss_tree_idx;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    if (cache_.count(keys[i]) != 0) {
      continue;
    }
    bool seen = false;
    for (std::size_t j : miss_tree_idx) {
      if (keys[j] == keys[i]) {
        seen = true;
        break;
      }
    }
    if (!seen) {
      miss_tree_idx.push_back(i);
    }
  }
  unique_episodes_ += miss_tree_idx.size();
  episodes_run_ += miss_tree_idx.size();

  std::vector<double> miss_fitness(miss_tree_idx.size());
  auto eval_one = [&](std::size_t k) {
    const BehaviorTree& t = trees[miss_tree_idx[k]];
    const EpisodeResult result = run_episode(t, task_);
    miss_fitness[k] = compute_fitness(result, t, task_);
  };
  if (jobs_ <= 1 || miss_tree_idx.size() <= 1) {
    for (std::size_t k = 0; k < miss_tree_idx.size(); ++k) {
      eval_one(k);
    }
  } else {
    std::atomic<std::size_t> next{0};
    const int workers =
        std::min<std::size_t>(static_cast<std::size_t>(jobs_),
                              miss_tree_idx.size());
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        while (true) {
          const std::size_t k = next.fetch_add(1);
          if (k >= miss_tree_idx.size()) {
            return;
          }
          eval_one(k);
        }
      });
    }
    for (auto& th : threads) {
      th.join();
    }
  }
  for (std::size_t k = 0; k < miss_tree_idx.size(); ++k) {
    cache_.emplace(keys[miss_tree_idx[k]], miss_fitness[k]);
  }

  std::vector<double> out;
  out.reserve(trees.size());
  for (const auto& key : keys) {
    out.push_back(cache_.at(key));
  }
  return out;
}

namespace {

const Individual* best_of(const std::vector<Individual>& pop) {
  const Individual* best = nullptr;
  for (const auto& ind : pop) {
    if (best == nullptr || *ind.fitness > *best->fitness ||
        (*ind.fitness == *best->fitness && ind.id < best->id)) {
      best = &ind;
    }
  }
  return best;
}

}  // namespace

std::vector<Individual> evolve_generation(const std::vector<Individual>& pop,
                                          const GpParams& params,
                                          VariantMode variant,
                                          CachedEvaluator& evaluator, Rng& rng,
                                          std::uint64_t& next_id) {
  const auto& pool = evaluator.task().behavior_pool;

  // Randomness is consumed in a fixed order: mutation parent selection,
  // mutation offspring, crossover parent selection, crossover offspring,
  // then survivor selection. Evaluation consumes none.
  const BoostMode mutation_boost = variant == VariantMode::BaselineBoostAll
                                       ? BoostMode::Baseline
                                       : BoostMode::None;
  const auto mutation_parents =
      rank_select(pop, params.mutation_parents, rng, mutation_boost);

  std::vector<BehaviorTree> offspring_trees;
  offspring_trees.reserve(
      static_cast<std::size_t>(params.mutation_parents) *
          static_cast<std::size_t>(params.mutation_offspring_per_parent) +
      static_cast<std::size_t>(params.crossover_parents) *
          static_cast<std::size_t>(params.crossover_offspring_per_parent));
  for (const Individual* parent : mutation_parents) {
    for (int k = 0; k < params.mutation_offspring_per_parent; ++k) {
      offspring_trees.push_back(mutate(parent->tree, rng, pool, params).first);
    }
  }

  const BoostMode crossover_boost =
      (variant == VariantMode::BaselineBoostCrossover ||
       variant == VariantMode::BaselineBoostAll)
          ? BoostMode::Baseline
          : BoostMode::None;
  auto crossover_parents =
      rank_select(pop, params.crossover_parents, rng, crossover_boost);
  // Pairs are drawn at random among the selected parents. Rank-adjacent
  // pairing would lock a boosted baseline onto the single current best,
  // which starves the rest of the population of its subtrees.
  for (std::size_t i = crossover_parents.size(); i > 1; --i) {
    std::swap(crossover_parents[i - 1],
              crossover_parents[rng.uniform_index(i)]);
  }
  for (std::size_t i = 0; i < crossover_parents.size(); ++i) {
    const Individual* recipient = crossover_parents[i];
    const Individual* donor = crossover_parents[i ^ 1];  // the pair partner
    for (int k = 0; k < params.crossover_offspring_per_parent; ++k) {
      offspring_trees.push_back(
          crossover_insert(recipient->tree, donor->tree, rng, params));
    }
  }

  const auto fitnesses = evaluator.evaluate_batch(offspring_trees);
  std::vector<Individual> all = pop;
  for (std::size_t i = 0; i < offspring_trees.size(); ++i) {
    all.push_back(Individual{std::move(offspring_trees[i]), fitnesses[i],
                             false, next_id++});
  }

  // Survivors: elites first (ties older-first), the rest rank-selected
  // from parents and offspring without boost.
  std::vector<const Individual*> ranked;
  ranked.reserve(all.size());
  for (const auto& ind : all) {
    ranked.push_back(&ind);
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const Individual* a, const Individual* b) {
              if (*a->fitness != *b->fitness) {
                return *a->fitness > *b->fitness;
              }
              return a->id < b->id;
            });
  std::vector<Individual> next_pop;
  next_pop.reserve(static_cast<std::size_t>(params.population_size));
  std::set<std::string> chosen_forms;
  for (int e = 0; e < params.elites; ++e) {
    next_pop.push_back(*ranked[static_cast<std::size_t>(e)]);
    chosen_forms.insert(serialize(next_pop.back().tree));
  }
  std::vector<const Individual*> order(ranked.begin() + params.elites,
                                       ranked.end());
  std::vector<std::uint64_t> weights(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    weights[i] = static_cast<std::uint64_t>(order.size() - i);
  }
  std::vector<const Individual*> duplicates;
  const std::size_t need = static_cast<std::size_t>(params.population_size);
  while (next_pop.size() < need && !order.empty()) {
    const std::size_t idx = rng.weighted_index(weights);
    const Individual* cand = order[idx];
    order.erase(order.begin() + static_cast<std::ptrdiff_t>(idx));
    weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(idx));
    if (params.distinct_survivors &&
        !chosen_forms.insert(serialize(cand->tree)).second) {
      duplicates.push_back(cand);
      continue;
    }
    next_pop.push_back(*cand);
  }
  for (std::size_t i = 0; next_pop.size() < need && i < duplicates.size();
       ++i) {
    next_pop.push_back(*duplicates[i]);
  }

  if (uses_baseline(variant)) {
    const bool present =
        std::any_of(next_pop.begin(), next_pop.end(),
                    [](const Individual& i) { return i.is_baseline; });
    if (!present) {
      const Individual* baseline = nullptr;
      for (const auto& ind : all) {
        if (ind.is_baseline) {
          baseline = &ind;
          break;
        }
      }
      assert(baseline != nullptr);
      // Replace the lowest-ranked non-elite (worst fitness; youngest on a
      // tie, so older individuals keep their place).
      std::size_t victim = static_cast<std::size_t>(params.elites);
      for (std::size_t i = victim + 1; i < next_pop.size(); ++i) {
        const Individual& a = next_pop[i];
        const Individual& v = next_pop[victim];
        if (*a.fitness < *v.fitness ||
            (*a.fitness == *v.fitness && a.id > v.id)) {
          victim = i;
        }
      }
      next_pop[victim] = *baseline;
    }
  }
  return next_pop;
}

namespace {

TraceRow make_row(int generation, const std::vector<Individual>& pop,
                  const CachedEvaluator& evaluator) {
  const Individual* best = best_of(pop);
  double sum = 0;
  for (const auto& ind : pop) {
    sum += *ind.fitness;
  }
  TraceRow row;
  row.generation = generation;
  row.episodes = evaluator.unique_episodes();
  row.best_fitness = *best->fitness;
  row.mean_fitness = sum / static_cast<double>(pop.size());
  row.best_tree = serialize(best->tree);
  return row;
}

}  // namespace

EvolutionTrace run_evolution(const GpParams& params, const TaskSpec& task,
                             VariantMode variant, std::uint64_t seed,
                             int generations,
                             const std::optional<BehaviorTree>& baseline,
                             int jobs) {
  params.check();
  if (uses_baseline(variant) && !baseline) {
    throw ConfigError("variant requires a planner baseline tree");
  }
  if (baseline && !is_valid(*baseline)) {
    throw ConfigError("baseline tree violates structural constraints");
  }

  Rng rng(seed);
  CachedEvaluator evaluator(task, jobs);
  std::uint64_t next_id = 0;

  std::vector<BehaviorTree> trees;
  trees.reserve(static_cast<std::size_t>(params.population_size));
  for (int i = 0; i < params.population_size; ++i) {
    trees.push_back(
        random_tree(rng, task.behavior_pool, params.initial_tree_size, params));
  }
  std::size_t baseline_slot = 0;
  if (uses_baseline(variant)) {
    baseline_slot = rng.uniform_index(trees.size());
    trees[baseline_slot] = *baseline;
  }

  const auto fitnesses = evaluator.evaluate_batch(trees);
  std::vector<Individual> pop;
  pop.reserve(trees.size());
  for (std::size_t i = 0; i < trees.size(); ++i) {
    pop.push_back(Individual{std::move(trees[i]), fitnesses[i],
                             uses_baseline(variant) && i == baseline_slot,
                             next_id++});
  }

  EvolutionTrace trace;
  trace.rows.reserve(static_cast<std::size_t>(generations) + 1);
  trace.rows.push_back(make_row(0, pop, evaluator));
  for (int g = 1; g <= generations; ++g) {
    pop = evolve_generation(pop, params, variant, evaluator, rng, next_id);
    trace.rows.push_back(make_row(g, pop, evaluator));
  }
  trace.best = *best_of(pop);
  return trace;
}

}  // namespace btsynth
