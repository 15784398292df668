#include <doctest.h>

#include <map>
#include <set>

#include "btsynth/config.hpp"
#include "btsynth/gp.hpp"
#include "btsynth/text.hpp"

#include "test_helpers.hpp"

using namespace btsynth;
using btsynth::test::beh;
using btsynth::test::mini_task;
using btsynth::test::tree_of;

namespace {

std::vector<BehaviorId> small_pool() {
  std::vector<BehaviorId> pool;
  for (const char* s : {"picked a?", "picked b?", "a on b?", "a at pos p?",
                        "pick a!", "pick b!", "place on a!", "place on b!",
                        "put a on b!", "apply force a!"}) {
    pool.push_back(*parse_behavior(s));
  }
  return pool;
}

Individual ind(double fitness, std::uint64_t id, bool baseline = false) {
  Individual i;
  i.tree = tree_of(R"(f("pick a!"))");
  i.fitness = fitness;
  i.is_baseline = baseline;
  i.id = id;
  return i;
}

}  // namespace

TEST_CASE("random trees hit the requested size and stay valid") {
  const auto pool = small_pool();
  GpParams params;
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    BehaviorTree t = random_tree(rng, pool, 8, params);
    CHECK(node_count(t) == 8);
    CHECK(validate(t).empty());
  }
}

TEST_CASE("a size-two draw is a control root with one leaf") {
  const auto pool = small_pool();
  GpParams params;
  Rng rng(9);
  BehaviorTree t = random_tree(rng, pool, 2, params);
  CHECK(node_count(t) == 2);
  CHECK(is_control(t.at(t.root).kind));
  CHECK(t.at(t.at(t.root).children[0]).kind == NodeKind::Leaf);
}

TEST_CASE("identical seeds grow identical trees") {
  const auto pool = small_pool();
  GpParams params;
  Rng a(1234);
  Rng b(1234);
  for (int i = 0; i < 50; ++i) {
    CHECK(serialize(random_tree(a, pool, 8, params)) ==
          serialize(random_tree(b, pool, 8, params)));
  }
}

TEST_CASE("adding a control node grows the tree by exactly three nodes") {
  const auto pool = small_pool();
  GpParams params;
  params.p_add = 1.0;
  params.p_delete = 0.0;
  params.p_change = 0.0;
  params.control_node_prob = 1.0;  // force control insertion
  Rng rng(3);
  BehaviorTree t = tree_of(R"(s("picked a?","pick a!"))");
  auto [mutated, kind] = mutate(t, rng, pool, params);
  CHECK(kind == MutationKind::Add);
  CHECK(node_count(mutated) == node_count(t) + 3);
  CHECK(validate(mutated).empty());
}

TEST_CASE("mutations never modify their input tree") {
  const auto pool = small_pool();
  GpParams params;
  Rng rng(17);
  BehaviorTree t = random_tree(rng, pool, 8, params);
  const std::string before = serialize(t);
  for (int i = 0; i < 500; ++i) {
    mutate(t, rng, pool, params);
    CHECK(serialize(t) == before);
  }
}

TEST_CASE("mutation closure and empirical kind frequencies") {
  const auto pool = small_pool();
  GpParams params;
  Rng rng(2024);
  std::map<MutationKind, int> counts;
  const int kTrials = 100000;
  for (int i = 0; i < kTrials; ++i) {
    BehaviorTree t = random_tree(rng, pool, 4 + (i % 8), params);
    auto [mutated, kind] = mutate(t, rng, pool, params);
    ++counts[kind];
    if (!is_valid(mutated)) {
      CAPTURE(serialize(mutated));
      FAIL("mutation produced an invalid tree");
    }
  }
  CHECK(counts[MutationKind::Add] / double(kTrials) ==
        doctest::Approx(0.40).epsilon(0.025));
  CHECK(counts[MutationKind::Delete] / double(kTrials) ==
        doctest::Approx(0.30).epsilon(0.033));
  CHECK(counts[MutationKind::Change] / double(kTrials) ==
        doctest::Approx(0.30).epsilon(0.033));
}

TEST_CASE("insert-crossover preserves counts and both parents' material") {
  const auto pool = small_pool();
  GpParams params;
  Rng rng(31);
  BehaviorTree recipient = tree_of(R"(s("picked a?","pick a!","place on b!"))");
  BehaviorTree donor = tree_of(R"(f("a on b?","put a on b!"))");
  bool saw_full_donor_subtree = false;
  for (int i = 0; i < 200; ++i) {
    BehaviorTree child = crossover_insert(recipient, donor, rng, params);
    CHECK(validate(child).empty());
    const int grafted = node_count(child) - node_count(recipient);
    CHECK(grafted >= 1);
    CHECK(grafted <= node_count(donor));
    if (grafted == node_count(donor)) {
      saw_full_donor_subtree = true;
    }
    // All recipient leaves survive.
    for (const char* s : {"picked a?", "pick a!", "place on b!"}) {
      CHECK(serialize(child).find(std::string("\"") + s + "\"") !=
            std::string::npos);
    }
  }
  CHECK(saw_full_donor_subtree);
}

TEST_CASE("crossover resamples insertions that would break constraints") {
  const auto pool = small_pool();
  GpParams params;
  Rng rng(77);
  // The donor's only single-leaf subtrees equal the recipient's condition;
  // inserting one next to it is illegal, so only multi-node subtrees or
  // separated slots may appear.
  BehaviorTree recipient = tree_of(R"(s("picked a?","pick a!"))");
  BehaviorTree donor = tree_of(R"(f("picked a?","picked b?"))");
  for (int i = 0; i < 500; ++i) {
    BehaviorTree child = crossover_insert(recipient, donor, rng, params);
    CHECK(validate(child).empty());
  }
}

TEST_CASE("degenerate crossover pairs fall back to the recipient") {
  const auto pool = small_pool();
  GpParams params;
  Rng rng(88);
  BehaviorTree recipient = tree_of(R"(f("picked a?"))");
  BehaviorTree donor = tree_of(R"(f("picked a?"))");
  BehaviorTree child = crossover_insert(recipient, donor, rng, params);
  CHECK(structurally_equal(child, recipient));
}

TEST_CASE("rank selection draws with linear rank weights") {
  Rng rng(101);
  std::vector<Individual> pop{ind(-1.0, 0), ind(-2.0, 1), ind(-3.0, 2),
                              ind(-4.0, 3)};
  std::map<std::uint64_t, int> first_draw;
  const int kTrials = 200000;
  for (int i = 0; i < kTrials; ++i) {
    auto sel = rank_select(pop, 1, rng, BoostMode::None);
    ++first_draw[sel[0]->id];
  }
  CHECK(first_draw[0] / double(kTrials) == doctest::Approx(0.4).epsilon(0.02));
  CHECK(first_draw[1] / double(kTrials) == doctest::Approx(0.3).epsilon(0.02));
  CHECK(first_draw[2] / double(kTrials) == doctest::Approx(0.2).epsilon(0.03));
  CHECK(first_draw[3] / double(kTrials) == doctest::Approx(0.1).epsilon(0.04));
}

TEST_CASE("selection without replacement never repeats an individual") {
  Rng rng(555);
  std::vector<Individual> pop;
  for (int i = 0; i < 16; ++i) {
    pop.push_back(ind(-double(i), static_cast<std::uint64_t>(i)));
  }
  for (int iter = 0; iter < 200; ++iter) {
    auto sel = rank_select(pop, 8, rng, BoostMode::None);
    std::set<std::uint64_t> ids;
    for (const auto* s : sel) {
      ids.insert(s->id);
    }
    CHECK(ids.size() == sel.size());
  }
}

TEST_CASE("boost ranks the worst-placed baseline right behind the best") {
  Rng rng(202);
  std::vector<Individual> pop;
  for (int i = 0; i < 15; ++i) {
    pop.push_back(ind(-double(i + 1), static_cast<std::uint64_t>(i)));
  }
  pop.push_back(ind(-1000.0, 15, true));  // baseline, worst of 16

  // Rank 1 of 16 carries weight 15 out of 136.
  std::map<bool, int> baseline_first;
  const int kTrials = 200000;
  for (int i = 0; i < kTrials; ++i) {
    auto sel = rank_select(pop, 1, rng, BoostMode::Baseline);
    ++baseline_first[sel[0]->is_baseline];
  }
  CHECK(baseline_first[true] / double(kTrials) ==
        doctest::Approx(15.0 / 136.0).epsilon(0.03));

  // Without boost the baseline is drawn by its true (worst) rank.
  std::map<bool, int> unboosted_first;
  for (int i = 0; i < kTrials; ++i) {
    auto sel = rank_select(pop, 1, rng, BoostMode::None);
    ++unboosted_first[sel[0]->is_baseline];
  }
  CHECK(unboosted_first[true] / double(kTrials) ==
        doctest::Approx(1.0 / 136.0).epsilon(0.2));
}

TEST_CASE("boost shifts no one except the baseline") {
  std::vector<Individual> pop;
  for (int i = 0; i < 8; ++i) {
    pop.push_back(ind(-double(i + 1), static_cast<std::uint64_t>(i)));
  }
  pop.push_back(ind(-50.0, 8, true));
  Rng rng(1);
  // Drawing everyone reveals the underlying rank order deterministically
  // via the weights; instead check relative order through repeated full
  // selections: non-baseline order must match the unboosted ranking.
  auto all_boosted = rank_select(pop, 9, rng, BoostMode::Baseline);
  std::vector<std::uint64_t> non_baseline;
  for (const auto* s : all_boosted) {
    if (!s->is_baseline) {
      non_baseline.push_back(s->id);
    }
  }
  CHECK(non_baseline.size() == 8);
}

TEST_CASE("the evaluation cache runs each distinct tree once") {
  TaskSpec task = mini_task();
  CachedEvaluator evaluator(task);
  auto a = tree_of(R"(f("g at pos P?","put g at pos P!"))");
  auto b = tree_of(R"(f("g at pos P?","put g at pos P!"))");
  const double f1 = evaluator.evaluate(a);
  const double f2 = evaluator.evaluate(b);
  CHECK(f1 == f2);
  CHECK(evaluator.unique_episodes() == 1);
  CHECK(evaluator.episodes_run() == 1);

  // Sibling order matters: a reordered tree is a different episode.
  auto reordered = tree_of(R"(s("put g at pos P!","picked g?"))");
  evaluator.evaluate(reordered);
  CHECK(evaluator.unique_episodes() == 2);

  // Batch evaluation dedupes within the batch as well.
  auto fits = evaluator.evaluate_batch({a, b, reordered, a});
  CHECK(fits[0] == f1);
  CHECK(evaluator.unique_episodes() == 2);
  CHECK(evaluator.episodes_run() == 2);
}

TEST_CASE("batch evaluation gives identical results for any job count") {
  TaskSpec task = mini_task();
  GpParams params;
  Rng rng(42);
  std::vector<BehaviorTree> trees;
  for (int i = 0; i < 64; ++i) {
    trees.push_back(random_tree(rng, task.behavior_pool, 6, params));
  }
  CachedEvaluator seq(task, 1);
  CachedEvaluator par(task, 8);
  const auto a = seq.evaluate_batch(trees);
  const auto b = par.evaluate_batch(trees);
  CHECK(a == b);
  CHECK(seq.unique_episodes() == par.unique_episodes());
}

TEST_CASE("one generation: elitism, baseline retention, bounded episodes") {
  TaskBundle bundle = load_task("task1");
  GpParams params = bundle.gp;
  CachedEvaluator evaluator(bundle.task);
  Rng rng(7);
  std::uint64_t next_id = 0;

  std::vector<BehaviorTree> trees;
  for (int i = 0; i < params.population_size; ++i) {
    trees.push_back(
        random_tree(rng, bundle.task.behavior_pool, 8, params));
  }
  auto fits = evaluator.evaluate_batch(trees);
  std::vector<Individual> pop;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    pop.push_back(Individual{trees[i], fits[i], i == 3, next_id++});
  }

  double best_before = -1e300;
  for (const auto& i : pop) {
    best_before = std::max(best_before, *i.fitness);
  }
  const auto episodes_before = evaluator.unique_episodes();
  auto next = evolve_generation(pop, params, VariantMode::Baseline, evaluator,
                                rng, next_id);
  CHECK(next.size() == static_cast<std::size_t>(params.population_size));

  double best_after = -1e300;
  int baselines = 0;
  for (const auto& i : next) {
    best_after = std::max(best_after, *i.fitness);
    baselines += i.is_baseline ? 1 : 0;
  }
  CHECK(best_after >= best_before);
  CHECK(baselines == 1);
  CHECK(evaluator.unique_episodes() - episodes_before <= 32);
}

TEST_CASE("evolution runs are deterministic and monotone") {
  TaskBundle bundle = load_task("task1");
  auto baseline = plan(bundle.task, bundle.action_models, bundle.goals);
  EvolutionTrace a = run_evolution(bundle.gp, bundle.task,
                                   VariantMode::Baseline, 11, 8, baseline);
  EvolutionTrace b = run_evolution(bundle.gp, bundle.task,
                                   VariantMode::Baseline, 11, 8, baseline);
  REQUIRE(a.rows.size() == 9);
  CHECK(serialize(a.best.tree) == serialize(b.best.tree));
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].best_fitness == b.rows[i].best_fitness);
    CHECK(a.rows[i].episodes == b.rows[i].episodes);
    CHECK(a.rows[i].best_tree == b.rows[i].best_tree);
    if (i > 0) {
      CHECK(a.rows[i].best_fitness >= a.rows[i - 1].best_fitness);
      CHECK(a.rows[i].episodes >= a.rows[i - 1].episodes);
      CHECK(a.rows[i].episodes - a.rows[i - 1].episodes <= 32);
    }
  }
}

TEST_CASE("with a baseline, generation zero already contains the plan") {
  TaskBundle bundle = load_task("task1");
  auto baseline = plan(bundle.task, bundle.action_models, bundle.goals);
  EvolutionTrace trace = run_evolution(bundle.gp, bundle.task,
                                       VariantMode::Baseline, 0, 1, baseline);
  // The planner solves this task, so nothing in a random population beats
  // its fitness.
  const EpisodeResult r = run_episode(baseline, bundle.task);
  const double planned_fitness = compute_fitness(r, baseline, bundle.task);
  CHECK(trace.rows[0].best_fitness == doctest::Approx(planned_fitness));
}

TEST_CASE("seeded variants demand a baseline tree") {
  TaskBundle bundle = load_task("task1");
  CHECK_THROWS_AS(run_evolution(bundle.gp, bundle.task, VariantMode::Baseline,
                                0, 1, std::nullopt),
                  ConfigError);
}

TEST_CASE("reachability: mutations cover the small-tree space") {
  // Pool of three behaviors; enumerate every valid tree of at most four
  // nodes by brute force, then grow the reachable set from each two-node
  // tree through exhaustive single-mutation successors.
  std::vector<BehaviorId> pool{*parse_behavior("picked a?"),
                               *parse_behavior("a at pos p?"),
                               *parse_behavior("pick a!")};

  // Brute-force enumeration oracle.
  std::set<std::string> all_valid;
  auto consider = [&](const BehaviorTree& t) {
    if (node_count(t) <= 4 && validate(t).empty()) {
      all_valid.insert(serialize(t));
    }
  };
  // Shapes: root with 1..3 leaves; root with one nested control (1..2
  // leaves) plus at most one root-level leaf on either side.
  for (NodeKind rk : {NodeKind::Fallback, NodeKind::Sequence}) {
    for (std::size_t a = 0; a < pool.size(); ++a) {
      BehaviorTree t1;
      int l = add_leaf(t1, pool[a]);
      t1.root = add_control(t1, rk, {l});
      consider(t1);
      for (std::size_t b = 0; b < pool.size(); ++b) {
        BehaviorTree t2;
        int x = add_leaf(t2, pool[a]);
        int y = add_leaf(t2, pool[b]);
        t2.root = add_control(t2, rk, {x, y});
        consider(t2);
        for (std::size_t c = 0; c < pool.size(); ++c) {
          BehaviorTree t3;
          int p = add_leaf(t3, pool[a]);
          int q = add_leaf(t3, pool[b]);
          int r = add_leaf(t3, pool[c]);
          t3.root = add_control(t3, rk, {p, q, r});
          consider(t3);
        }
        // Nested control with one leaf, sibling leaf before/after.
        for (int position = 0; position < 2; ++position) {
          BehaviorTree t4;
          NodeKind nested = rk == NodeKind::Fallback ? NodeKind::Sequence
                                                     : NodeKind::Fallback;
          int inner_leaf = add_leaf(t4, pool[a]);
          int inner = add_control(t4, nested, {inner_leaf});
          int outer_leaf = add_leaf(t4, pool[b]);
          t4.root = add_control(t4, rk,
                                position == 0
                                    ? std::vector<int>{inner, outer_leaf}
                                    : std::vector<int>{outer_leaf, inner});
          consider(t4);
        }
      }
      // Root with a single nested control holding two leaves.
      for (std::size_t b = 0; b < pool.size(); ++b) {
        for (std::size_t c = 0; c < pool.size(); ++c) {
          BehaviorTree t5;
          NodeKind nested = rk == NodeKind::Fallback ? NodeKind::Sequence
                                                     : NodeKind::Fallback;
          int x = add_leaf(t5, pool[b]);
          int y = add_leaf(t5, pool[c]);
          int inner = add_control(t5, nested, {x, y});
          t5.root = add_control(t5, rk, {inner});
          consider(t5);
        }
      }
    }
  }
  REQUIRE(all_valid.size() > 20);

  // Exhaustive successor enumeration mirroring the mutation operators.
  auto successors = [&](const BehaviorTree& t) {
    std::vector<BehaviorTree> out;
    const auto slots = insertion_slots(t);
    for (const auto& [parent, pos] : slots) {
      for (const auto& id : pool) {
        BehaviorTree cand = with_leaf_inserted(t, parent, pos, id);
        if (is_valid(cand)) {
          out.push_back(std::move(cand));
        }
      }
      for (NodeKind kind : {NodeKind::Fallback, NodeKind::Sequence}) {
        for (const auto& c0 : pool) {
          for (const auto& c1 : pool) {
            BehaviorTree cand =
                with_control_inserted(t, parent, pos, kind, c0, c1);
            if (is_valid(cand)) {
              out.push_back(std::move(cand));
            }
          }
        }
      }
    }
    for (int idx : subtree_of(t, t.root)) {
      if (idx != t.root) {
        auto cand = with_subtree_deleted(t, idx);
        if (cand && is_valid(*cand)) {
          out.push_back(std::move(*cand));
        }
      }
      for (const auto& id : pool) {
        BehaviorTree cand = with_node_replaced_by_leaf(t, idx, id);
        if (idx != t.root && is_valid(cand)) {
          out.push_back(std::move(cand));
        }
      }
      if (is_control(t.at(idx).kind)) {
        for (NodeKind kind : {NodeKind::Fallback, NodeKind::Sequence}) {
          BehaviorTree cand = with_control_kind_changed(t, idx, kind);
          if (is_valid(cand)) {
            out.push_back(std::move(cand));
          }
        }
      } else {
        for (NodeKind kind : {NodeKind::Fallback, NodeKind::Sequence}) {
          for (const auto& c0 : pool) {
            for (const auto& c1 : pool) {
              BehaviorTree cand =
                  with_leaf_replaced_by_control(t, idx, kind, c0, c1);
              if (is_valid(cand)) {
                out.push_back(std::move(cand));
              }
            }
          }
        }
      }
    }
    return out;
  };

  // Breadth-first growth of the reachable set from one two-node seed,
  // bounded to six nodes so control detours can pass through.
  BehaviorTree seed;
  int l = add_leaf(seed, pool[0]);
  seed.root = add_control(seed, NodeKind::Fallback, {l});
  std::set<std::string> reached{serialize(seed)};
  std::vector<BehaviorTree> frontier{seed};
  while (!frontier.empty()) {
    std::vector<BehaviorTree> next;
    for (const auto& t : frontier) {
      for (auto& succ : successors(t)) {
        if (node_count(succ) > 6) {
          continue;
        }
        auto key = serialize(succ);
        if (reached.insert(key).second) {
          next.push_back(std::move(succ));
        }
      }
    }
    frontier = std::move(next);
  }
  for (const auto& target : all_valid) {
    if (reached.count(target) == 0) {
      CAPTURE(target);
      FAIL("valid tree unreachable from the two-node seed");
    }
  }
}
