#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "btsynth/config.hpp"
#include "btsynth/experiment.hpp"
#include "btsynth/planner.hpp"
#include "btsynth/text.hpp"

namespace {

using namespace btsynth;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string s = ss.str();
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) {
    s.pop_back();
  }
  return s;
}

int cmd_plan(const std::string& task_name, const std::string& out_file) {
  const TaskBundle bundle = load_task(task_name);
  const BehaviorTree tree = plan(bundle.task, bundle.action_models,
                                 bundle.goals);
  const std::string text = serialize(tree);
  const EpisodeResult episode = run_episode(tree, bundle.task);
  const double fitness = compute_fitness(episode, tree, bundle.task);
  std::cout << text << "\n";
  std::printf("nodes: %d\nend: %s after %d ticks\nfitness: %.6f\n",
              node_count(tree), to_string(episode.end_reason),
              episode.ticks_used, fitness);
  if (!out_file.empty()) {
    std::ofstream out(out_file, std::ios::binary);
    out << text << "\n";
  }
  return 0;
}

int cmd_eval(const std::string& task_name, const std::string& tree_file) {
  const TaskBundle bundle = load_task(task_name);
  const BehaviorTree tree = parse_tree(read_file(tree_file));
  auto violations = validate(tree);
  if (!violations.empty()) {
    std::cerr << "tree violates constraints:\n";
    for (const auto& v : violations) {
      std::cerr << "  " << v.message << "\n";
    }
    return 1;
  }
  const EpisodeResult episode = run_episode(tree, bundle.task);
  const double fitness = compute_fitness(episode, tree, bundle.task);
  std::printf("nodes: %d\nend: %s after %d ticks\nheld_at_end: %s\n"
              "fitness: %.6f\n",
              node_count(tree), to_string(episode.end_reason),
              episode.ticks_used, episode.held_at_end ? "yes" : "no", fitness);
  for (const auto& e : episode.final_world.placements) {
    const char* kind = e.kind == PlacementEventKind::Placed    ? "placed"
                       : e.kind == PlacementEventKind::Toppled ? "toppled"
                                                               : "blocked";
    std::printf("  tick %3d  %-7s %s at (%.1f, %.1f)\n", e.tick, kind,
                e.brick.c_str(), e.target_x, e.target_y);
  }
  return 0;
}

int cmd_render(const std::string& tree_file) {
  const BehaviorTree tree = parse_tree(read_file(tree_file));
  auto violations = validate(tree);
  if (!violations.empty()) {
    std::cerr << "tree violates constraints: " << violations.front().message
              << "\n";
    return 1;
  }
  std::cout << to_dot(tree);
  return 0;
}

int cmd_evolve(const std::string& task_name, const std::string& variant_name,
               std::uint32_t seed, int generations, const std::string& out_dir,
               int jobs) {
  auto variant = variant_from_string(variant_name);
  if (!variant) {
    std::cerr << "unknown variant '" << variant_name << "'\n";
    return 1;
  }
  ExperimentPlan plan_spec;
  plan_spec.task = task_name;
  plan_spec.variants = {*variant};
  plan_spec.seeds = {seed};
  plan_spec.generations_override = generations;
  plan_spec.out_dir = out_dir;
  plan_spec.jobs = jobs;
  const auto records = run_experiment(plan_spec);
  for (const auto& rec : records) {
    const auto& last = rec.trace.rows.back();
    std::printf(
        "%s %s seed=%u generations=%d episodes=%llu best=%.6f "
        "unique_ratio=%.3f (%.2fs)\n",
        rec.task.c_str(), to_string(rec.variant), rec.seed, rec.generations,
        static_cast<unsigned long long>(last.episodes), last.best_fitness,
        rec.unique_episode_ratio, rec.elapsed_seconds);
  }
  return 0;
}

int cmd_experiment(const std::string& plan_file) {
  std::ifstream in(plan_file);
  if (!in) {
    std::cerr << "cannot open plan file " << plan_file << "\n";
    return 1;
  }
  nlohmann::json j;
  in >> j;
  ExperimentPlan plan_spec;
  plan_spec.task = j.at("task").get<std::string>();
  for (const auto& v : j.at("variants")) {
    auto variant = variant_from_string(v.get<std::string>());
    if (!variant) {
      std::cerr << "unknown variant '" << v.get<std::string>() << "'\n";
      return 1;
    }
    plan_spec.variants.push_back(*variant);
  }
  for (const auto& s : j.value("seeds", nlohmann::json::array())) {
    plan_spec.seeds.push_back(s.get<std::uint32_t>());
  }
  plan_spec.generations_override = j.value("generations", 0);
  plan_spec.out_dir = j.value("out_dir", default_out_dir());
  plan_spec.jobs = j.value("jobs", 1);
  const auto records = run_experiment(plan_spec);
  std::printf("wrote %zu runs to %s\n", records.size(),
              plan_spec.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Behavior-tree synthesis workbench: backchaining planner plus "
               "genetic programming over a deterministic block world"};
  app.require_subcommand(1);

  std::string task_name;
  std::string tree_file;
  std::string out_file;
  std::string variant_name = "baseline";
  std::string out_dir = btsynth::default_out_dir();
  std::uint32_t seed = 0;
  int generations = 0;
  int jobs = 1;

  auto* plan_cmd = app.add_subcommand("plan", "print the planned tree and its fitness");
  plan_cmd->add_option("task", task_name, "task name or config path")->required();
  plan_cmd->add_option("--out", out_file, "also write the canonical text to a file");

  auto* eval_cmd = app.add_subcommand("eval", "run one episode of a tree file");
  eval_cmd->add_option("task", task_name)->required();
  eval_cmd->add_option("tree", tree_file, "file with the canonical tree text")->required();

  auto* render_cmd = app.add_subcommand("render", "print DOT for a tree file");
  render_cmd->add_option("tree", tree_file)->required();

  auto* evolve_cmd = app.add_subcommand("evolve", "run one evolution");
  evolve_cmd->add_option("task", task_name)->required();
  evolve_cmd->add_option("--variant", variant_name,
                         "scratch | baseline | baseline-boost-crossover | baseline-boost-all");
  evolve_cmd->add_option("--seed", seed);
  evolve_cmd->add_option("--generations", generations, "0 = task default");
  evolve_cmd->add_option("--out", out_dir);
  evolve_cmd->add_option("--jobs", jobs, "parallel evaluations (outputs are identical for any value)");

  auto* exp_cmd = app.add_subcommand("experiment", "run a multi-variant plan file");
  exp_cmd->add_option("plan", tree_file, "JSON plan file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (plan_cmd->parsed()) {
      return cmd_plan(task_name, out_file);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(task_name, tree_file);
    }
    if (render_cmd->parsed()) {
      return cmd_render(tree_file);
    }
    if (evolve_cmd->parsed()) {
      return cmd_evolve(task_name, variant_name, seed, generations, out_dir,
                        jobs);
    }
    if (exp_cmd->parsed()) {
      return cmd_experiment(tree_file);
    }
  } catch (const btsynth::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const btsynth::TreeParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
