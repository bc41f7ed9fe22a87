#include "pmapp/cli.hpp"
#include "pmapp/error.hpp"
#include "pmapp/io.hpp"
#include "pmapp/seed_plan.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

using namespace pmapp;
using namespace pmapp::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("pmapp_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

int count(const std::string& text, const std::string& needle) {
  int n = 0;
  for (size_t at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("plan round trip preserves every value") {
  Rng rng(51);
  for (int trial = 0; trial < 10; ++trial) {
    PeriodicPlan plan = random_plan(rng, uniform_int(rng, 1, 3), uniform_int(rng, 1, 3), uniform_int(rng, 2, 6), false);
    plan.tau0 = 1.25;
    const std::string text = plan_to_json(plan, {0.4999, std::string("converged")});
    PlanMeta meta;
    const PeriodicPlan back = plan_from_json(text, &meta);
    CHECK(back.env == plan.env);
    CHECK(back.tau == plan.tau);
    CHECK(back.tau0 == plan.tau0);
    CHECK(meta.status.value() == "converged");
    CHECK(meta.optimized_radius.value() == 0.4999);
    for (size_t t = 0; t < plan.trajectories.size(); ++t) {
      CHECK(back.trajectories[t].dt == plan.trajectories[t].dt);
      for (size_t k = 0; k < plan.trajectories[t].points.size(); ++k) {
        CHECK((back.trajectories[t].points[k] - plan.trajectories[t].points[k]).norm() <= 1e-12);
      }
    }
    CHECK(plan_to_json(back, meta) == text);
  }
}

TEST_CASE("built-in environments are stored by name") {
  const PeriodicPlan plan = generate_seed_plan(builtin_environment('c')).plan;
  const std::string text = plan_to_json(plan);
  CHECK(text.find("\"env\": \"c\"") != std::string::npos);
  CHECK(plan_from_json(text).env == plan.env);
}

TEST_CASE("malformed plan files are parse errors") {
  const std::string good = plan_to_json(generate_seed_plan(builtin_environment('a')).plan);
  for (const std::string& bad : {good.substr(0, good.size() / 2), std::string("[]"), std::string("{\"version\": 1}"),
                                 std::string("not json")}) {
    try {
      plan_from_json(bad);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kParse);
    }
  }
}

TEST_CASE("environment and trace round trips") {
  Rng rng(52);
  const Environment env = random_room(rng, 3);
  CHECK(environment_from_json(environment_to_json(env)) == env);
  const StreamTrace trace = sample_arrivals({0.5, 1.5, 77, 50}, 2);
  const StreamTrace back = trace_from_json(trace_to_json(trace));
  CHECK(back.streams == trace.streams);
  CHECK(back.model.seed == 77);
  CHECK_THROWS_AS(trace_from_json("{\"seed\":1,\"lambda\":1,\"c\":1,\"horizon\":5,\"streams\":[[2,1]]}"), Error);
}

TEST_CASE("svg has one polyline per trajectory") {
  SeedOptions opts;
  opts.cycle = 2;
  const PeriodicPlan plan = generate_seed_plan(builtin_environment('a'), opts).plan;
  const std::string svg = render_svg(plan);
  CHECK(count(svg, "<polyline") == 4);
  CHECK(count(svg, "<polygon") == 1);
  CHECK(count(svg, "class=\"tick\"") > 0);
  CHECK(render_svg(plan) == svg);
  PeriodicPlan empty = plan;
  empty.trajectories.clear();
  CHECK(count(render_svg(empty), "<polyline") == 0);
}

TEST_CASE("cli exit codes") {
  TempDir dir;
  const std::string plan = dir / "plan.json";
  Run gen = cli({"gen-initial", "--env", "a", "--K", "8", "--out", plan});
  REQUIRE(gen.code == 0);
  CHECK(gen.out.find("tau0 ") != std::string::npos);

  CHECK(cli({"gen-initial", "--env", dir / "missing.json"}).code == 2);
  CHECK(cli({"gen-initial", "--env", "a", "--cycle", "0"}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);

  // The relaxed seed has radius 0 and validates.
  CHECK(cli({"validate", "--plan", plan}).code == 0);

  // A physical radius with the period halved collides.
  PeriodicPlan p = plan_from_json(read_file(plan));
  p.radius = 0.5;
  p.tau *= 0.5;
  write_file(dir / "tight.json", plan_to_json(p));
  const Run tight = cli({"validate", "--plan", dir / "tight.json"});
  CHECK(tight.code == 1);
  CHECK(tight.err.find("\"kind\":\"collision\"") != std::string::npos);

  const std::string text = read_file(plan);
  write_file(dir / "cut.json", text.substr(0, text.size() / 3));
  CHECK(cli({"validate", "--plan", dir / "cut.json"}).code == 2);

  const Run capped = cli({"optimize", "--plan", plan, "--iters", "1", "--out", dir / "o.json"});
  CHECK(capped.code == 3);
  CHECK(capped.err.find("warning") != std::string::npos);
  PlanMeta meta;
  plan_from_json(read_file(dir / "o.json"), &meta);
  CHECK(meta.status.value() == "max-iterations");

  CHECK(cli({"render", "--plan", plan, "--out", dir / "p.svg"}).code == 0);
  CHECK(count(read_file(dir / "p.svg"), "<polyline") == 2);
}

TEST_CASE("cli analyze marks unstable rows") {
  const Run r = cli({"analyze", "--tau", "2", "--c", "1"});
  REQUIRE(r.code == 0);
  CHECK(count(r.out, "\n") == 11);
  CHECK(r.out.find("0.5,1,0.5,1.5,2.5") != std::string::npos);
  CHECK(count(r.out, "unstable") == 14);  // lambda >= 1: 7 rows, two columns
  const Run one = cli({"analyze", "--tau", "1.5", "--lambda", "1"});
  CHECK(one.out.find("1,0.5,0.5,0.75,1.75") != std::string::npos);
}

TEST_CASE("cli simulate writes runs and aggregates") {
  TempDir dir;
  std::vector<Point> room{{-5, -2}, {5, -2}, {5, 2}, {-5, 2}};
  const Environment env("lane", room, {{Point(-1, 0), Point(1, 0)}});
  PeriodicPlan plan{env, 1, 2.0, 0.5, 0.5, 1.0, std::nullopt, {}};
  plan.trajectories.push_back({0, 0, 1.0, {Point(-1, 0), Point(0, 0), Point(1, 0)}});
  write_file(dir / "lane.json", plan_to_json(plan));

  const Run r = cli({"simulate", "--plan", dir / "lane.json", "--reps", "3", "--lambda", "0.25", "--lambda", "2.5",
                     "--queue-cap", "5"});
  REQUIRE(r.code == 0);
  CHECK(count(r.out, "\nrun,") == 6);
  CHECK(count(r.out, "\nmean,") == 2);
  const Run again = cli({"simulate", "--plan", dir / "lane.json", "--reps", "3", "--lambda", "0.25", "--lambda",
                         "2.5", "--queue-cap", "5"});
  CHECK(again.out == r.out);
  CHECK(cli({"simulate", "--plan", dir / "lane.json", "--queue-cap", "five"}).code == 2);
  CHECK(cli({"simulate", "--plan", dir / "lane.json", "--lambda", "-1"}).code == 2);

  const Run full = cli({"simulate", "--plan", dir / "lane.json", "--reps", "10"});
  CHECK(count(full.out, "\n") == 1 + 10 * 10 + 10);
}
