#include "pmapp/cli.hpp"
#include "pmapp/error.hpp"
#include "pmapp/flowsim.hpp"
#include "pmapp/io.hpp"
#include "pmapp/optimizer.hpp"
#include "pmapp/seed_plan.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace pmapp;

namespace {

py::dict report_dict(const ValidationReport& r) {
  py::list violations;
  for (const Violation& v : r.violations) {
    violations.append(py::dict(py::arg("kind") = to_string(v.kind), py::arg("ids") = v.ids,
                               py::arg("worst_margin") = v.worst_margin));
  }
  return py::dict(py::arg("ok") = r.ok, py::arg("violations") = violations,
                  py::arg("min_velocity_margin") = r.min_velocity_margin,
                  py::arg("min_clearance_margin") = r.min_clearance_margin,
                  py::arg("min_collision_margin") = r.min_collision_margin);
}

py::dict metrics_dict(const SimMetrics& m) {
  py::list streams;
  for (const StreamMetrics& s : m.streams) {
    streams.append(py::dict(py::arg("arrivals") = s.arrivals, py::arg("served") = s.served,
                            py::arg("failed") = s.failed, py::arg("entered") = s.entered,
                            py::arg("throughput") = s.throughput, py::arg("average_delay") = s.average_delay,
                            py::arg("mean_wait") = s.mean_wait));
  }
  return py::dict(py::arg("throughput") = m.throughput, py::arg("average_delay") = m.average_delay,
                  py::arg("served") = m.served, py::arg("failed") = m.failed, py::arg("entered") = m.entered,
                  py::arg("mean_wait") = m.mean_wait, py::arg("wait_stderr") = m.wait_stderr,
                  py::arg("min_separation") = m.min_separation, py::arg("spot_checks") = m.spot_checks,
                  py::arg("streams") = streams);
}

QueueConfig queue_from(std::optional<int> capacity) {
  return capacity ? QueueConfig::bounded(*capacity) : QueueConfig::unbounded();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Periodic multi-agent path planning: seed plans, period optimization, validation and queue simulation.";

  // Messages start with the error kind, e.g. "parse: ...".
  py::register_exception<Error>(m, "PmappError", PyExc_ValueError);

  py::class_<Environment>(m, "Environment")
      .def(py::init([](std::string name, std::vector<Point> polygon, std::vector<std::pair<Point, Point>> ends) {
             std::vector<Endpoints> e;
             for (auto& [s, g] : ends) e.push_back({s, g});
             return Environment(std::move(name), std::move(polygon), std::move(e));
           }),
           py::arg("name"), py::arg("polygon"), py::arg("endpoints"))
      .def_property_readonly("name", &Environment::name)
      .def_property_readonly("polygon", &Environment::polygon)
      .def_property_readonly("streams", &Environment::streams)
      .def_property_readonly("endpoints",
                             [](const Environment& env) {
                               std::vector<std::pair<Point, Point>> out;
                               for (const auto& e : env.endpoints()) out.emplace_back(e.start, e.goal);
                               return out;
                             })
      .def("to_json", [](const Environment& env) { return environment_to_json(env); })
      .def_static("from_json", &environment_from_json)
      .def("__eq__", &Environment::operator==);

  m.def("builtin_environment", [](const std::string& name) {
    if (!is_builtin_scene(name)) throw Error(ErrorKind::kInvalidArgument, "unknown scene '" + name + "'");
    return builtin_environment(name[0]);
  });
  m.def("load_environment", &load_environment, "Built-in scene letter or environment JSON file.");
  m.def("shortest_path",
        [](const Environment& env, int stream) {
          const ReferencePath p = shortest_path(env, stream);
          return py::make_tuple(p.vertices, p.length);
        },
        py::arg("env"), py::arg("stream"), "Vertices and length of the shortest path of one stream.");

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("stream", &Trajectory::stream)
      .def_readonly("slot", &Trajectory::slot)
      .def_readwrite("dt", &Trajectory::dt)
      .def_readwrite("points", &Trajectory::points)
      .def_property_readonly("duration", &Trajectory::duration)
      .def("position_at", &Trajectory::position_at);

  py::class_<PeriodicPlan>(m, "Plan")
      .def_property_readonly("env", [](const PeriodicPlan& p) { return p.env; })
      .def_readonly("cycle", &PeriodicPlan::cycle)
      .def_readwrite("tau", &PeriodicPlan::tau)
      .def_readwrite("radius", &PeriodicPlan::radius)
      .def_readonly("target_radius", &PeriodicPlan::target_radius)
      .def_readonly("v_max", &PeriodicPlan::v_max)
      .def_readonly("tau0", &PeriodicPlan::tau0)
      .def_property_readonly("streams", &PeriodicPlan::streams)
      .def_property_readonly("steps", &PeriodicPlan::steps)
      .def_readwrite("trajectories", &PeriodicPlan::trajectories)
      .def("trajectory", py::overload_cast<int, int>(&PeriodicPlan::at, py::const_), py::arg("stream"),
           py::arg("slot"), py::return_value_policy::reference_internal)
      .def("to_json", [](const PeriodicPlan& p) { return plan_to_json(p); })
      .def_static("from_json", [](const std::string& text) { return plan_from_json(text); })
      .def("validate",
           [](const PeriodicPlan& p, double tol, std::optional<double> radius) {
             return report_dict(validate_plan(p, tol, radius));
           },
           py::arg("tol") = 1e-3, py::arg("radius") = py::none())
      .def("render_svg", [](const PeriodicPlan& p) { return render_svg(p); })
      .def("collision_pairs", [](const PeriodicPlan& p) {
        std::vector<py::tuple> out;
        for (const auto& c : collision_pairs(p)) {
          out.push_back(py::make_tuple(c.stream, c.slot, c.k, c.stream2, c.slot2, c.k2, c.alpha));
        }
        return out;
      });

  m.def("generate_seed_plan",
        [](const Environment& env, int cycle, int steps, double slack, std::optional<double> tau) {
          SeedOptions opts;
          opts.cycle = cycle;
          opts.steps = steps;
          opts.slack = slack;
          opts.tau_init = tau;
          return generate_seed_plan(env, opts).plan;
        },
        py::arg("env"), py::arg("cycle") = 1, py::arg("steps") = 32, py::arg("slack") = 1.0,
        py::arg("tau") = py::none(), "Relaxed initial plan; its tau0 attribute holds the minimal period.");

  m.def("optimize",
        [](const PeriodicPlan& plan, int max_iterations, std::optional<int> phase1, std::optional<int> phase2,
           std::optional<int> phase3, std::function<void(py::dict)> callback) {
          OptimizerConfig cfg;
          cfg.max_iterations = max_iterations;
          if (phase1) cfg.schedule.phase1_iters = *phase1;
          if (phase2) cfg.schedule.phase2_iters = *phase2;
          if (phase3) cfg.schedule.phase3_iters = *phase3;
          if (callback) {
            cfg.on_iteration = [&](const IterationRecord& r) {
              callback(py::dict(py::arg("iteration") = r.iteration, py::arg("phase") = r.phase,
                                py::arg("cost") = r.cost, py::arg("tau") = r.tau, py::arg("radius") = r.radius));
            };
          }
          // The callback needs the GIL for every iteration; without one the
          // optimizer runs with it released.
          std::optional<py::gil_scoped_release> release;
          if (!callback) release.emplace();
          OptimizeResult res = lm_minimize(plan, cfg);
          release.reset();
          py::list costs;
          for (const auto& r : res.trace) costs.append(r.cost);
          return py::dict(py::arg("plan") = res.plan, py::arg("optimized_radius") = res.optimized_radius,
                          py::arg("converged") = res.status == OptimizeStatus::kConverged,
                          py::arg("iterations") = res.trace.size(), py::arg("costs") = costs);
        },
        py::arg("plan"), py::arg("max_iterations") = 50000, py::arg("phase1") = py::none(),
        py::arg("phase2") = py::none(), py::arg("phase3") = py::none(), py::arg("callback") = nullptr);

  m.def("sample_arrivals",
        [](int streams, double lambda, double c, std::uint64_t seed, double horizon) {
          return sample_arrivals({c, lambda, seed, horizon}, streams).streams;
        },
        py::arg("streams"), py::arg("lam"), py::arg("c") = 1.0, py::arg("seed") = 0, py::arg("horizon") = 1000.0);

  m.def("simulate",
        [](const PeriodicPlan& plan, double lambda, double c, std::uint64_t seed, double horizon,
           std::optional<int> capacity) {
          const StreamTrace trace = sample_arrivals({c, lambda, seed, horizon}, plan.streams());
          return metrics_dict(simulate(plan, trace, queue_from(capacity)));
        },
        py::arg("plan"), py::arg("lam"), py::arg("c") = 1.0, py::arg("seed") = 0, py::arg("horizon") = 1000.0,
        py::arg("capacity") = py::none(), "Sample arrivals and run the dispatcher; capacity None is unbounded.");

  m.def("mdi_prediction",
        [](double lambda, double c, double tau) {
          const QueuePrediction q = mdi_prediction(lambda, c, tau);
          return py::dict(py::arg("D") = q.D, py::arg("rho") = q.rho, py::arg("W_prime") = q.W_prime,
                          py::arg("W") = q.W);
        },
        py::arg("lam"), py::arg("c"), py::arg("tau"));

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, err;
          const int code = run_cli(args, out, err);
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run a pmapp command; returns (exit code, stdout, stderr).");
}
