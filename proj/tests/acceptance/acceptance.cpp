// Acceptance suite: one PASS/FAIL line per criterion. With an argument,
// runs only that criterion; the exit status is non-zero if any ran and failed.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "adversarial.hpp"
#include "oracles.hpp"
#include "vxp/bench/suite.hpp"
#include "vxp/dynamics/online.hpp"
#include "vxp/planner/planner.hpp"
#include "vxp/voxel/distance_transform.hpp"
#include "vxp/voxel/smoothing.hpp"

using namespace vxp;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string pct(double r) {
  char b[16];
  std::snprintf(b, sizeof b, "%.1f%%", 100.0 * r);
  return b;
}

std::unique_ptr<lmp::LmpRuntime> fixture_runtime() {
  return std::make_unique<lmp::LmpRuntime>(std::make_shared<lmp::FixtureSource>(lmp::FixtureStore::load_default()));
}

double success_rate(lmp::LmpRuntime& rt, const std::string& id, sim::Split split, int n, bool disturbances) {
  bench::SuiteSelection sel;
  sel.templates = {id};
  sel.splits = {split};
  sel.episodes = n;
  sel.disturbances = disturbances;
  return bench::run_suite(rt, sel).by_split.at(std::string(sim::to_string(split))).rate();
}

// 1 ---------------------------------------------------------------------------

/// Compares squared distances exactly and the densified field bitwise.
bool edt_matches(const std::vector<VoxelIndex>& targets, const std::array<int, 3>& d) {
  const GridSpec spec(d, {0, 0, 0}, {0.01 * d[0], 0.01 * d[1], 0.01 * d[2]});
  ValueMap m(MapKind::affordance, spec);
  std::vector<unsigned char> mask(spec.voxel_count(), 0);
  for (const auto& t : targets) {
    m.at(t) = 1.0;
    mask[spec.linear(t)] = 1;
  }
  const auto d2 = squared_edt(mask, d);
  std::size_t i = 0;
  for (int x = 0; x < d[0]; ++x)
    for (int y = 0; y < d[1]; ++y)
      for (int z = 0; z < d[2]; ++z, ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& t : targets) {
          const double dx = x - t.x, dy = y - t.y, dz = z - t.z;
          best = std::min(best, dx * dx + dy * dy + dz * dz);
        }
        if (d2[i] != best) return false;
      }
  const auto out = densify_affordance(m);
  const auto expect = oracle::densified(targets, d);
  return std::equal(expect.begin(), expect.end(), out.data().begin());
}

Verdict criterion_1() {
  const auto t0 = Clock::now();
  long cases = 0, bad = 0;
  const auto check = [&](const std::vector<VoxelIndex>& t, const std::array<int, 3>& d) {
    ++cases;
    if (!edt_matches(t, d)) ++bad;
  };
  // Every target set of size <= 3 on every grid up to 3x3x3.
  for (int a = 1; a <= 3; ++a)
    for (int b = 1; b <= 3; ++b)
      for (int c = 1; c <= 3; ++c) {
        const std::array<int, 3> d{a, b, c};
        const GridSpec spec(d, {0, 0, 0}, {1, 1, 1});
        const int n = static_cast<int>(spec.voxel_count());
        for (int i = 0; i < n; ++i) {
          check({spec.unlinear(i)}, d);
          for (int j = i + 1; j < n; ++j) {
            check({spec.unlinear(i), spec.unlinear(j)}, d);
            for (int k = j + 1; k < n; ++k) check({spec.unlinear(i), spec.unlinear(j), spec.unlinear(k)}, d);
          }
        }
      }
  // Every single target on cubes 4..12, plus random pairs and triples.
  std::mt19937_64 rng(1);
  for (int n = 4; n <= 12; ++n) {
    const std::array<int, 3> d{n, n, n};
    const GridSpec spec(d, {0, 0, 0}, {1, 1, 1});
    for (std::size_t i = 0; i < spec.voxel_count(); i += (n > 8 ? 3 : 1)) check({spec.unlinear(i)}, d);
    std::uniform_int_distribution<std::size_t> u(0, spec.voxel_count() - 1);
    for (int r = 0; r < 40; ++r) {
      check({spec.unlinear(u(rng)), spec.unlinear(u(rng))}, d);
      check({spec.unlinear(u(rng)), spec.unlinear(u(rng)), spec.unlinear(u(rng))}, d);
    }
  }
  // 100 random 20^3 grids with 1..5 targets.
  for (int r = 0; r < 100; ++r) {
    const std::array<int, 3> d{20, 20, 20};
    std::uniform_int_distribution<int> u(0, 19), k(1, 5);
    std::vector<VoxelIndex> t(static_cast<std::size_t>(k(rng)));
    for (auto& v : t) v = {u(rng), u(rng), u(rng)};
    check(t, d);
  }
  const double secs = since(t0);
  return {bad == 0 && secs < 10.0,
          std::to_string(cases - bad) + "/" + std::to_string(cases) + " exact, " + std::to_string(secs) + " s"};
}

// 2 ---------------------------------------------------------------------------

Verdict criterion_2() {
  const std::array<int, 3> d{11, 11, 11};
  const GridSpec spec(d, {0, 0, 0}, {0.11, 0.11, 0.11});
  double worst = 0.0;
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> u(0, 10);
  std::vector<VoxelIndex> spikes{{5, 5, 5}, {0, 0, 0}, {10, 3, 7}};
  for (int i = 0; i < 7; ++i) spikes.push_back({u(rng), u(rng), u(rng)});
  for (const auto& spike : spikes) {
    ValueMap m(MapKind::avoidance, spec);
    m.at(spike) = 1.0;
    const auto out = smooth_avoidance(m);
    const std::vector<double> in(m.data().begin(), m.data().end());
    const auto expect = oracle::smoothed(in, d, GaussianParams{}.sigma, GaussianParams{}.truncate);
    for (std::size_t i = 0; i < expect.size(); ++i) worst = std::max(worst, std::abs(out.data()[i] - expect[i]));
  }
  std::ostringstream os;
  os << spikes.size() << " spikes, max abs error " << worst;
  return {worst <= 1e-9, os.str()};
}

// 3 ---------------------------------------------------------------------------

Verdict criterion_3() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  const GridSpec spec({12, 12, 12}, {0, 0, 0}, {0.12, 0.12, 0.12});
  int ok = 0;
  for (int trial = 0; trial < 50; ++trial) {
    ValueMap raw(MapKind::affordance, spec), avoid(MapKind::avoidance, spec);
    for (double& v : raw.data()) v = u(rng) < 0.01 ? 0.1 + u(rng) : 0.0;
    raw.data()[static_cast<std::size_t>(trial)] = 0.5;
    for (double& v : avoid.data()) v = u(rng) < 0.02 ? u(rng) : 0.0;
    const auto smooth = smooth_avoidance(avoid);
    std::vector<std::vector<double>> costs;
    for (double c : {0.1, 1.0, 10.0}) {
      ValueMap scaled = raw;
      for (double& v : scaled.data()) v *= c;
      costs.push_back(compose_cost(densify_affordance(scaled), smooth).data);
    }
    ok += costs[0] == costs[1] && costs[1] == costs[2];
  }
  return {ok == 50, std::to_string(ok) + "/50 map pairs bitwise identical across c in {0.1, 1, 10}"};
}

// 4 ---------------------------------------------------------------------------

lmp::MapSet random_maps(const GridSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ValueMap aff = empty_map(MapKind::affordance, spec), avo = empty_map(MapKind::avoidance, spec);
  for (double& v : aff.data()) v = u(rng);
  for (double& v : avo.data()) v = u(rng) < 0.15 ? 1.0 : 0.2 * u(rng);
  lmp::MapSet m;
  m.affordance = std::move(aff);
  m.avoidance = std::move(avo);
  m.entity = {lmp::EntityRef::Kind::end_effector, "gripper", "gripper"};
  return m;
}

Verdict criterion_4() {
  std::mt19937_64 rng(4);
  planner::PlannerConfig cfg;
  int greedy_checked = 0, greedy_bad = 0, sampled_checked = 0, sampled_bad = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = trial < 40 ? 8 : 12;
    const GridSpec spec({n, n, n}, {0, 0, 0}, {0.01 * n, 0.01 * n, 0.01 * n});
    const lmp::MapSet maps = random_maps(spec, rng);
    sim::WorldState s;
    s.spec = spec;
    const auto ctx = planner::make_context(maps, s, cfg);
    std::uniform_int_distribution<int> ui(0, n - 1);
    const VoxelIndex start{ui(rng), ui(rng), ui(rng)};
    if (ctx.collides(start)) continue;
    const auto path = planner::greedy_path(ctx.cost, start, cfg, &ctx.blocked);
    ++greedy_checked;
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (ctx.collides(path[i])) ++greedy_bad;
      if (i > 0 && ctx.cost.at(path[i]) > ctx.cost.at(path[i - 1])) ++greedy_bad;
    }
    if (n != 8) continue;
    // Exhaustive optimum over all 26-connected collision-free paths of the
    // same length bounds the sampled plan's task cost from below; the greedy
    // candidate bounds its score from above.
    const planner::Plan p = planner::sample_and_score(ctx, start, {}, cfg, 500 + trial);
    std::vector<unsigned char> free(spec.voxel_count());
    for (std::size_t i = 0; i < free.size(); ++i) free[i] = !ctx.blocked[i];
    const double bound = oracle::min_path_cost(ctx.cost.data, free, spec, start, p.trajectory.voxels.size());
    const double control =
        cfg.lambda_len * planner::path_length(p.trajectory) + cfg.lambda_rot * planner::rotation_effort(p.trajectory);
    ++sampled_checked;
    bool bad = p.score > p.greedy_score || p.score - control < bound - 1e-9;
    for (const auto& v : p.trajectory.voxels) bad = bad || ctx.collides(v);
    sampled_bad += bad;
  }
  std::ostringstream os;
  os << greedy_checked << " greedy paths (" << greedy_bad << " violations), " << sampled_checked
     << " sampled plans on 8^3 (" << sampled_bad << " outside the exhaustive bound)";
  return {greedy_bad == 0 && sampled_bad == 0 && greedy_checked >= 30 && sampled_checked >= 20, os.str()};
}

// 5 ---------------------------------------------------------------------------

Verdict criterion_5() {
  using dynamics::MatrixXd;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0, 1);
  const auto rnd = [&](int r, int c, double s) {
    MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = s * g(rng);
    return m;
  };
  dynamics::Mlp net({14, 64, 64, 10}, 11);
  net.weight(2) = rnd(64, 10, 0.3);
  const MatrixXd x = rnd(16, 14, 1.0), y = rnd(16, 10, 1.0);
  std::vector<double> grad;
  net.loss_and_gradient(x, y, &grad);
  std::vector<double> p = net.parameters();
  std::uniform_int_distribution<std::size_t> pick(0, p.size() - 1);
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t i = pick(rng);
    const double h = 1e-5 * std::max(1.0, std::abs(p[i])), keep = p[i];
    p[i] = keep + h;
    net.set_parameters(p);
    const double up = net.loss_and_gradient(x, y, nullptr);
    p[i] = keep - h;
    net.set_parameters(p);
    const double down = net.loss_and_gradient(x, y, nullptr);
    p[i] = keep;
    net.set_parameters(p);
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(fd - grad[i]) / std::max(1e-6, std::abs(fd) + std::abs(grad[i])));
  }
  // Single linear unit against the normal equations.
  const int n = 60;
  MatrixXd lx = rnd(n, 1, 1.0), ly(n, 1), a(n, 2);
  for (int i = 0; i < n; ++i) ly(i, 0) = -0.8 * lx(i, 0) + 0.3 + 0.05 * g(rng);
  a << lx, MatrixXd::Ones(n, 1);
  const Eigen::Vector2d sol = (a.transpose() * a).ldlt().solve(a.transpose() * ly);
  dynamics::Mlp unit({1, 1}, 12);
  for (int step = 0; step < 3000; ++step) dynamics::train_step(unit, lx, ly, 0.3);
  const double err = std::max(std::abs(unit.weight(0)(0, 0) - sol(0)), std::abs(unit.bias(0)(0) - sol(1)));
  std::ostringstream os;
  os << "max relative gradient error " << worst << " over 100 coordinates, least-squares gap " << err;
  return {worst < 1e-4 && err < 1e-4, os.str()};
}

// 6 ---------------------------------------------------------------------------

Verdict criterion_6() {
  const auto t0 = Clock::now();
  auto rt = fixture_runtime();
  bool pass = true;
  std::ostringstream os;
  for (const char* id : {"move_avoid_item", "close_drawer_plain"}) {
    const double with = success_rate(*rt, id, sim::Split::seen, 20, true);
    const double without = success_rate(*rt, id, sim::Split::seen, 20, false);
    pass = pass && with >= 0.70 && without >= 0.85;
    os << id << " disturbed " << pct(with) << " static " << pct(without) << "; ";
  }
  const double secs = since(t0);
  os << secs << " s";
  return {pass && secs < 300.0, os.str()};
}

// 7 ---------------------------------------------------------------------------

Verdict criterion_7() {
  const auto t0 = Clock::now();
  auto rt = fixture_runtime();
  bool pass = true;
  std::ostringstream os;
  for (const char* id : {"move_region", "move_keep_distance", "move_preposition"}) {
    const double sa = success_rate(*rt, id, sim::Split::seen, 20, false);
    const double ua = success_rate(*rt, id, sim::Split::unseen, 20, false);
    pass = pass && sa >= 0.80 && std::abs(ua - sa) <= 0.20 + 1e-12;
    os << id << " SA " << pct(sa) << " UA " << pct(ua) << "; ";
  }
  const double secs = since(t0);
  os << secs << " s";
  return {pass && secs < 900.0, os.str()};
}

// 8 ---------------------------------------------------------------------------

Verdict criterion_8() {
  const auto t0 = Clock::now();
  auto rt = fixture_runtime();
  const auto task = sim::make_task("open_door", sim::Split::seen, 0);
  const dynamics::OnlineConfig cfg;
  bool pass = true;
  std::ostringstream os;
  os << "with prior:";
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto r = dynamics::online_loop(*rt, task, true, cfg, seed);
    pass = pass && r.success >= cfg.target_success && !r.exceeded && r.transitions <= 300;
    os << " " << pct(r.success) << "@" << r.transitions << "(" << r.interaction_seconds << " s sim)";
  }
  os << "; without:";
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto r = dynamics::online_loop(*rt, task, false, cfg, seed);
    pass = pass && r.success <= 0.20;
    os << " " << pct(r.success) << "@" << r.transitions;
  }
  const double secs = since(t0);
  os << "; " << secs << " s";
  return {pass && secs < 600.0, os.str()};
}

// 9 ---------------------------------------------------------------------------

Verdict criterion_9() {
  std::string csv[2];
  for (auto& c : csv) {
    auto rt = fixture_runtime();
    const auto report = bench::run_suite(*rt, bench::SuiteSelection::full());
    std::ostringstream os;
    bench::write_cells_csv(os, report);
    bench::write_episodes_csv(os, report);
    c = os.str();
  }
  return {csv[0] == csv[1] && !csv[0].empty(),
          std::to_string(csv[0].size()) + " bytes, " + (csv[0] == csv[1] ? "identical" : "different")};
}

// 10 --------------------------------------------------------------------------

Verdict criterion_10() {
  const auto cases = adversarial::load();
  int ok = 0;
  std::string bad;
  for (const auto& c : cases) {
    const auto o = adversarial::run(c);
    if (o.ok(c)) ++ok;
    else bad += " " + c.name + "=" + o.observed;
  }
  return {ok == 20 && cases.size() == 20,
          std::to_string(ok) + "/" + std::to_string(cases.size()) + " rejected or contained as documented" + bad};
}

struct Criterion {
  std::string name;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {"distance-transform oracle equivalence", criterion_1},
      {"gaussian smoothing spike response", criterion_2},
      {"cost composition invariant to affordance scale", criterion_3},
      {"greedy and sampled path properties", criterion_4},
      {"learned-model gradient and least-squares checks", criterion_5},
      {"MPC disturbance recovery", criterion_6},
      {"task-suite seen/unseen direction", criterion_7},
      {"dynamics-learning prior effect", criterion_8},
      {"fixture-mode suite determinism", criterion_9},
      {"sandbox adversarial corpus", criterion_10},
  };
  int only = argc > 1 ? std::atoi(argv[1]) : 0;
  if (only < 0 || only > static_cast<int>(all.size())) {
    std::fprintf(stderr, "criterion must be 1..%zu\n", all.size());
    return 2;
  }
  int failed = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    Verdict v;
    try {
      v = all[i].run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, all[i].name.c_str(), v.detail.c_str());
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed ? 1 : 0;
}
