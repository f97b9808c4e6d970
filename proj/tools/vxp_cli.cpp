#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "json.hpp"
#include "vxp/bench/suite.hpp"
#include "vxp/dynamics/online.hpp"
#include "vxp/lmp/llm_client.hpp"

using namespace vxp;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string mode = "fixture";
  std::string out;
  bool disturbances = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--mode", c.mode, "Program source")->check(CLI::IsMember({"fixture", "endpoint"}));
  app->add_option("-o,--out", c.out, "Output directory");
  app->add_flag("--disturbances", c.disturbances, "Inject the scripted disturbance schedule");
}

std::unique_ptr<lmp::LmpRuntime> make_runtime(const Common& c) {
  std::shared_ptr<lmp::ProgramSource> src;
  if (c.mode == "endpoint") {
    const auto cfg = lmp::EndpointConfig::from_env();
    if (cfg.base_url.empty()) fail(ErrorKind::setup, "endpoint mode needs VXP_LLM_BASE_URL");
    src = std::make_shared<lmp::EndpointSource>(cfg, lmp::load_default_prompts());
  } else {
    src = std::make_shared<lmp::FixtureSource>(lmp::FixtureStore::load_default());
  }
  return std::make_unique<lmp::LmpRuntime>(src);
}

sim::Split parse_split(const std::string& s) { return s == "unseen" ? sim::Split::unseen : sim::Split::seen; }

/// Task from a JSON file, or drawn from a template.
struct TaskArgs {
  std::string file;
  std::string templ;
  std::string split = "seen";
  std::uint64_t index = 0;

  void add(CLI::App* app) {
    auto* f = app->add_option("--task", file, "Task JSON file")->check(CLI::ExistingFile);
    auto* t = app->add_option("-t,--template", templ, "Template id");
    f->excludes(t);
    app->add_option("--split", split, "Attribute split")->check(CLI::IsMember({"seen", "unseen"}));
    app->add_option("--index", index, "Binding draw index");
  }

  sim::TaskSpec resolve(bool disturbances) const {
    if (!file.empty()) {
      std::ifstream is(file);
      sim::TaskSpec t = nlohmann::json::parse(is).get<sim::TaskSpec>();
      t.disturbances = t.disturbances || disturbances;
      return t;
    }
    if (templ.empty()) fail(ErrorKind::invalid_input, "give --task or --template");
    return sim::make_task(templ, parse_split(split), index, disturbances);
  }
};

void print_episode(const bench::EpisodeResult& r) {
  std::cout << (r.success ? "success" : "failure") << "  " << r.instruction << "  seed=" << r.seed
            << " ticks=" << r.ticks << " replans=" << r.replans << " pushes=" << r.pushes;
  if (!r.success) std::cout << " category=" << bench::to_string(r.failure);
  std::cout << "\n";
  if (!r.error.empty()) std::cout << "  error: " << r.error << "\n";
  if (!r.trace_path.empty()) std::cout << "  trace: " << r.trace_path << "\n";
}

void dump_maps(lmp::LmpRuntime& rt, const sim::TaskSpec& task, std::uint64_t seed, const fs::path& dir, int z) {
  fs::create_directories(dir);
  const sim::WorldState s = sim::reset(task, seed);
  const auto subtasks = rt.plan_subtasks(task.instruction(), s);
  int n = 0;
  for (std::size_t i = 0; i < subtasks.size(); ++i) {
    const lmp::Composition comp = rt.compose(subtasks[i], s);
    for (std::size_t j = 0; j < comp.maps.size(); ++j) {
      const lmp::MapSet& m = comp.maps[j];
      const std::string stem = "sub" + std::to_string(i) + "_step" + std::to_string(j) + "_";
      for (MapKind k : {MapKind::affordance, MapKind::avoidance, MapKind::rotation, MapKind::velocity, MapKind::gripper}) {
        if (!m.get(k)) continue;
        const std::string name = stem + std::string(to_string(k));
        std::ofstream bin(dir / (name + ".bin"), std::ios::binary);
        write_binary(bin, *m.get(k));
        std::ofstream txt(dir / (name + ".txt"));
        write_slice(txt, *m.get(k), z);
        ++n;
      }
      if (m.affordance) {
        const CostMap c = compose_cost(&*m.affordance, m.avoidance ? &*m.avoidance : nullptr);
        const int zz = std::clamp(z, 0, c.spec.dim(2) - 1);
        std::ofstream txt(dir / (stem + "cost.txt"));
        txt << "# cost slice z=" << zz << " entity=" << m.entity.name << "\n" << std::fixed << std::setprecision(2);
        for (int y = c.spec.dim(1) - 1; y >= 0; --y)
          for (int x = 0; x < c.spec.dim(0); ++x)
            txt << c.data[c.spec.linear({x, y, zz})] << (x + 1 < c.spec.dim(0) ? ' ' : '\n');
      }
    }
    std::cout << "sub-task " << i << ": " << subtasks[i] << " (" << comp.maps.size() << " execute calls)\n";
  }
  std::cout << "wrote " << n << " maps to " << dir.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Voxel value-map planning benchmark"};
  app.require_subcommand(1);

  Common run_c, suite_c, learn_c, dump_c;
  TaskArgs run_t, dump_t;
  std::uint64_t run_seed = 0, dump_seed = 0;
  int dump_z = 10;

  auto* run = app.add_subcommand("run", "Run a single episode");
  add_common(run, run_c);
  run_t.add(run);
  run->add_option("-s,--seed", run_seed, "Scene seed");

  auto* suite = app.add_subcommand("suite", "Run the task suite and write a report");
  add_common(suite, suite_c);
  std::vector<std::string> suite_templates, suite_splits{"seen", "unseen"};
  std::vector<std::uint64_t> suite_seeds;
  int suite_episodes = 20;
  suite->add_option("--templates", suite_templates, "Template ids (default: the 13 suite rows)");
  suite->add_option("--splits", suite_splits, "Attribute splits")->check(CLI::IsMember({"seen", "unseen"}));
  suite->add_option("--episodes", suite_episodes, "Episodes per cell")->check(CLI::NonNegativeNumber);
  suite->add_option("--seeds", suite_seeds, "Seed list (default 0..episodes-1)");

  auto* learn = app.add_subcommand("learn", "Online dynamics learning on the latched door");
  add_common(learn, learn_c);
  std::uint64_t learn_seed = 0;
  bool no_prior = false;
  std::size_t budget = 300;
  learn->add_option("-s,--seed", learn_seed, "Learner seed");
  learn->add_flag("--no-prior", no_prior, "Sample actions uniformly instead of around the zero-shot trajectory");
  learn->add_option("--budget", budget, "Transition budget");

  auto* dump = app.add_subcommand("dump-maps", "Write the value maps of a task's first scene");
  add_common(dump, dump_c);
  dump_t.add(dump);
  dump->add_option("-s,--seed", dump_seed, "Scene seed");
  dump->add_option("-z,--slice", dump_z, "Height index of the text slices");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto rt = make_runtime(run_c);
      bench::EpisodeConfig cfg;
      if (!run_c.out.empty()) cfg.trace_dir = run_c.out;
      const auto r = bench::run_episode(*rt, run_t.resolve(run_c.disturbances), run_seed, cfg);
      print_episode(r);
      return r.success ? 0 : 1;
    }
    if (*suite) {
      auto rt = make_runtime(suite_c);
      bench::SuiteSelection sel = suite_templates.empty() ? bench::SuiteSelection::full() : bench::SuiteSelection{};
      if (!suite_templates.empty()) sel.templates = suite_templates;
      sel.splits.clear();
      for (const auto& s : suite_splits) sel.splits.push_back(parse_split(s));
      sel.episodes = suite_episodes;
      sel.seeds = suite_seeds;
      sel.disturbances = suite_c.disturbances;
      const auto report = bench::run_suite(*rt, sel);
      bench::write_summary(std::cout, report);
      if (!suite_c.out.empty()) {
        bench::report_emit(report, suite_c.out);
        std::cout << "report written to " << suite_c.out << "\n";
      }
      return 0;
    }
    if (*learn) {
      auto rt = make_runtime(learn_c);
      dynamics::OnlineConfig cfg;
      cfg.transition_budget = budget;
      const auto r = dynamics::online_loop(*rt, sim::make_task("open_door", sim::Split::seen, 0), !no_prior, cfg, learn_seed);
      dynamics::write_curve_csv(std::cout, r.curve);
      std::cout << "success " << r.success << " baseline " << r.baseline_success << " transitions " << r.transitions
                << " simulated_seconds " << r.interaction_seconds << (r.exceeded ? " (budget exhausted)" : "") << "\n";
      if (!learn_c.out.empty()) {
        fs::create_directories(learn_c.out);
        r.model.save((fs::path(learn_c.out) / "model.bin").string());
        std::ofstream os(fs::path(learn_c.out) / "curve.csv");
        dynamics::write_curve_csv(os, r.curve);
        if (!os) fail(ErrorKind::io, "cannot write curve.csv");
      }
      return r.success >= cfg.target_success ? 0 : 1;
    }
    if (*dump) {
      auto rt = make_runtime(dump_c);
      dump_maps(*rt, dump_t.resolve(dump_c.disturbances), dump_seed, dump_c.out.empty() ? "maps" : dump_c.out, dump_z);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
