#include "pmapp/cli.hpp"

#include "pmapp/error.hpp"
#include "pmapp/flowsim.hpp"
#include "pmapp/io.hpp"
#include "pmapp/optimizer.hpp"
#include "pmapp/seed_plan.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

namespace pmapp {

namespace {

constexpr int kOk = 0;
constexpr int kValidationFailure = 1;
constexpr int kInputError = 2;
constexpr int kNotConverged = 3;

const std::vector<double> kLambdaGrid{0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidPlan: return kValidationFailure;
    case ErrorKind::kDiverged:
    case ErrorKind::kNonfiniteResidual: return kNotConverged;
    default: return kInputError;
  }
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file(path, text);
  }
}

int thread_cap() {
  int cap = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PMAPP_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) cap = v;
  }
  return std::max(1, cap);
}

template <typename F>
void parallel_for(int jobs, F&& body) {
  const int workers = std::min(jobs, thread_cap());
  if (workers <= 1) {
    for (int i = 0; i < jobs; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < jobs; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

QueueConfig parse_queue(const std::string& cap) {
  if (cap == "inf" || cap == "infinite") return QueueConfig::unbounded();
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(cap, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != cap.size()) throw Error(ErrorKind::kInvalidArgument, "queue capacity must be an integer or 'inf'");
  return QueueConfig::bounded(value);
}

std::string predicted(double lambda, double c, double tau) {
  try {
    return fmt(mdi_prediction(lambda, c, tau).W);
  } catch (const Error&) {
    return "unstable";
  }
}

struct Args {
  std::string env;
  std::string plan;
  std::string out;
  std::string trace_out;
  std::string trace_in;
  int cycle = 1;
  int steps = 32;
  std::uint64_t seed = 0;
  std::vector<double> lambdas;
  std::string queue_cap = "inf";
  std::optional<double> horizon;
  int iters = 50000;
  std::optional<int> phase1, phase2, phase3, stride;
  std::optional<double> tau;
  double tol = 1e-3;
  int reps = 10;
  double c = 1.0;
  bool verbose = false;
};

int cmd_gen_initial(const Args& a, std::ostream& out) {
  const Environment env = load_environment(a.env);
  SeedOptions opts;
  opts.cycle = a.cycle;
  opts.steps = a.steps;
  opts.tau_init = a.tau;
  const SeedResult seed = generate_seed_plan(env, opts);
  emit(a.out, plan_to_json(seed.plan), out);
  if (!a.out.empty() && a.out != "-") {
    out << "tau0 " << fmt(seed.schedule.tau0) << "\ntau " << fmt(seed.plan.tau) << "\n";
  }
  return kOk;
}

int cmd_optimize(const Args& a, std::ostream& out, std::ostream& err) {
  const PeriodicPlan plan = plan_from_json(read_file(a.plan));
  OptimizerConfig cfg;
  cfg.max_iterations = a.iters;
  if (a.phase1) cfg.schedule.phase1_iters = *a.phase1;
  if (a.phase2) cfg.schedule.phase2_iters = *a.phase2;
  if (a.phase3) cfg.schedule.phase3_iters = *a.phase3;
  if (a.stride) cfg.schedule.phase2_refresh_stride = *a.stride;
  if (a.verbose) cfg.log = &err;
  const OptimizeResult res = lm_minimize(plan, cfg);
  const bool converged = res.status == OptimizeStatus::kConverged;
  PlanMeta meta{res.optimized_radius, converged ? "converged" : "max-iterations"};
  emit(a.out, plan_to_json(res.plan, meta), out);
  if (!a.trace_out.empty()) write_file(a.trace_out, trace_csv(res.trace));
  const ValidationReport report = validate_plan(res.plan, a.tol);
  std::ostream& info = (a.out.empty() || a.out == "-") ? err : out;
  info << "tau " << fmt(res.plan.tau) << "\nradius " << fmt(res.optimized_radius) << "\niterations "
       << res.trace.size() << "\nstatus " << *meta.status << "\nvalid " << (report.ok ? "yes" : "no")
       << "\n";
  if (!converged) {
    err << "warning: iteration cap reached before the convergence test passed\n";
    return kNotConverged;
  }
  return report.ok ? kOk : kValidationFailure;
}

int cmd_validate(const Args& a, std::ostream& out, std::ostream& err) {
  const PeriodicPlan plan = plan_from_json(read_file(a.plan));
  const ValidationReport report = validate_plan(plan, a.tol);
  for (const Violation& v : report.violations) {
    nlohmann::json j{{"kind", to_string(v.kind)}, {"ids", v.ids}, {"worst_margin", v.worst_margin}};
    err << j.dump() << "\n";
  }
  nlohmann::json summary{{"ok", report.ok},
                         {"violations", report.violations.size()},
                         {"min_velocity_margin", report.min_velocity_margin},
                         {"min_clearance_margin", report.min_clearance_margin},
                         {"min_collision_margin", report.min_collision_margin}};
  out << summary.dump() << "\n";
  return report.ok ? kOk : kValidationFailure;
}

int cmd_simulate(const Args& a, std::ostream& out) {
  const PeriodicPlan plan = plan_from_json(read_file(a.plan));
  const QueueConfig queue = parse_queue(a.queue_cap);
  SimOptions sim_opts;
  sim_opts.validation_tol = a.tol;
  const std::string cap = queue.capacity ? std::to_string(*queue.capacity) : "inf";
  const std::string header =
      "kind,lambda,seed,queue_cap,throughput,avg_delay,served,failed,mean_wait,predicted_W,"
      "throughput_std,avg_delay_std,served_std,failed_std,mean_wait_std\n";

  if (!a.trace_in.empty()) {
    const StreamTrace trace = trace_from_json(read_file(a.trace_in));
    const SimMetrics m = simulate(plan, trace, queue, sim_opts);
    std::ostringstream csv;
    csv << header << "run," << fmt(trace.model.lambda) << "," << trace.model.seed << "," << cap << ","
        << fmt(m.throughput) << "," << fmt(m.average_delay) << "," << m.served << "," << m.failed
        << "," << fmt(m.mean_wait) << "," << predicted(trace.model.lambda, trace.model.c, plan.tau)
        << ",,,,,\n";
    emit(a.out, csv.str(), out);
    return kOk;
  }

  const std::vector<double> lambdas = a.lambdas.empty() ? kLambdaGrid : a.lambdas;
  for (double l : lambdas) {
    if (!(l > 0.0)) throw Error(ErrorKind::kInvalidArgument, "lambda values must be positive");
  }
  if (a.reps < 1) throw Error(ErrorKind::kInvalidArgument, "--reps must be >= 1");
  const double horizon = a.horizon.value_or(queue.capacity ? 100.0 : 1000.0);
  const int jobs = static_cast<int>(lambdas.size()) * a.reps;
  std::vector<SimMetrics> results(jobs);
  if (!validate_plan(plan, a.tol).ok) throw Error(ErrorKind::kInvalidPlan, "plan fails validation");
  parallel_for(jobs, [&](int i) {
    const ArrivalModel model{a.c, lambdas[i / a.reps], a.seed + static_cast<std::uint64_t>(i % a.reps),
                             horizon};
    results[i] = simulate(plan, sample_arrivals(model, plan.streams()), queue, sim_opts);
  });

  std::ostringstream csv;
  csv << header;
  for (size_t li = 0; li < lambdas.size(); ++li) {
    const double l = lambdas[li];
    const std::string pw = predicted(l, a.c, plan.tau);
    std::vector<std::array<double, 5>> rows;
    for (int r = 0; r < a.reps; ++r) {
      const SimMetrics& m = results[li * a.reps + r];
      rows.push_back({m.throughput, m.average_delay, double(m.served), double(m.failed), m.mean_wait});
      csv << "run," << fmt(l) << "," << a.seed + r << "," << cap << "," << fmt(m.throughput) << ","
          << fmt(m.average_delay) << "," << m.served << "," << m.failed << "," << fmt(m.mean_wait)
          << "," << pw << ",,,,,\n";
    }
    std::array<double, 5> mean{}, sd{};
    for (const auto& row : rows) {
      for (int c = 0; c < 5; ++c) mean[c] += row[c] / rows.size();
    }
    for (const auto& row : rows) {
      for (int c = 0; c < 5; ++c) sd[c] += (row[c] - mean[c]) * (row[c] - mean[c]);
    }
    for (int c = 0; c < 5; ++c) sd[c] = rows.size() > 1 ? std::sqrt(sd[c] / (rows.size() - 1)) : 0.0;
    csv << "mean," << fmt(l) << ",," << cap;
    for (int c = 0; c < 5; ++c) csv << "," << fmt(mean[c]);
    csv << "," << pw;
    for (int c = 0; c < 5; ++c) csv << "," << fmt(sd[c]);
    csv << "\n";
  }
  emit(a.out, csv.str(), out);
  return kOk;
}

int cmd_analyze(const Args& a, std::ostream& out) {
  double tau = 0.0;
  if (a.tau) {
    tau = *a.tau;
  } else if (!a.plan.empty()) {
    tau = plan_from_json(read_file(a.plan)).tau;
  } else {
    throw Error(ErrorKind::kInvalidArgument, "analyze needs --tau or --plan");
  }
  const std::vector<double> lambdas = a.lambdas.empty() ? kLambdaGrid : a.lambdas;
  std::ostringstream csv;
  csv << "lambda,D,rho,W_prime,W\n";
  for (double l : lambdas) {
    const double d = tau - a.c;
    csv << fmt(l) << "," << fmt(d) << "," << fmt(d * l) << ",";
    try {
      const QueuePrediction p = mdi_prediction(l, a.c, tau);
      csv << fmt(p.W_prime) << "," << fmt(p.W) << "\n";
    } catch (const Error&) {
      csv << "unstable,unstable\n";
    }
  }
  emit(a.out, csv.str(), out);
  return kOk;
}

int cmd_render(const Args& a, std::ostream& out) {
  const PeriodicPlan plan = plan_from_json(read_file(a.plan));
  emit(a.out, render_svg(plan), out);
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Periodic multi-agent path planning"};
  app.require_subcommand(1);
  Args a;

  auto* gen = app.add_subcommand("gen-initial", "Build the relaxed initial plan for a scene");
  gen->add_option("--env", a.env, "Scene letter a-f or environment JSON file")->required();
  gen->add_option("--cycle", a.cycle, "Cycle M")->check(CLI::PositiveNumber);
  gen->add_option("--K", a.steps, "Segments per trajectory")->check(CLI::Range(2, 100000));
  gen->add_option("--tau", a.tau, "Initial period (default max(tau0, 2 r0 / v_max))");
  gen->add_option("--seed", a.seed, "Unused; accepted for uniform scripting");
  gen->add_option("--out", a.out, "Output plan file (default stdout)");

  auto* opt = app.add_subcommand("optimize", "Minimize the period of a plan");
  opt->add_option("--plan", a.plan, "Input plan file")->required();
  opt->add_option("--out", a.out, "Output plan file (default stdout)");
  opt->add_option("--trace", a.trace_out, "Convergence trace CSV");
  opt->add_option("--iters", a.iters, "Iteration cap")->check(CLI::NonNegativeNumber);
  opt->add_option("--phase1", a.phase1, "Phase 1 length");
  opt->add_option("--phase2", a.phase2, "Phase 2 length");
  opt->add_option("--phase3", a.phase3, "Phase 3 length");
  opt->add_option("--stride", a.stride, "Phase 2 refresh stride");
  opt->add_option("--tol", a.tol, "Validation tolerance");
  opt->add_option("--seed", a.seed, "Unused; the optimizer is deterministic");
  opt->add_flag("--verbose", a.verbose, "Log distance-floor events");

  auto* val = app.add_subcommand("validate", "Check a plan against the exact constraints");
  val->add_option("--plan", a.plan, "Plan file")->required();
  val->add_option("--tol", a.tol, "Tolerance");

  auto* sim = app.add_subcommand("simulate", "Run the queue simulation over a lambda sweep");
  sim->add_option("--plan", a.plan, "Plan file")->required();
  sim->add_option("--lambda", a.lambdas, "Arrival rate (repeatable)");
  sim->add_option("--queue-cap", a.queue_cap, "Queue capacity, integer or 'inf'");
  sim->add_option("--horizon", a.horizon, "Simulated time (default 1000, or 100 with a finite queue)");
  sim->add_option("--reps", a.reps, "Seeds per lambda");
  sim->add_option("--seed", a.seed, "First seed");
  sim->add_option("--c", a.c, "Constant part of the inter-arrival time");
  sim->add_option("--trace", a.trace_in, "Simulate this arrival trace file instead of sampling");
  sim->add_option("--tol", a.tol, "Validation tolerance");
  sim->add_option("--out", a.out, "Output CSV (default stdout)");

  auto* ana = app.add_subcommand("analyze", "M/D/1 predictions over a lambda grid");
  ana->add_option("--tau", a.tau, "Period");
  ana->add_option("--plan", a.plan, "Take the period from a plan file");
  ana->add_option("--lambda", a.lambdas, "Arrival rate (repeatable)");
  ana->add_option("--c", a.c, "Constant part of the inter-arrival time");
  ana->add_option("--out", a.out, "Output CSV (default stdout)");

  auto* ren = app.add_subcommand("render", "Draw a plan as SVG");
  ren->add_option("--plan", a.plan, "Plan file")->required();
  ren->add_option("--out", a.out, "Output SVG (default stdout)");

  std::vector<const char*> argv{"pmapp"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    if (*gen) return cmd_gen_initial(a, out);
    if (*opt) return cmd_optimize(a, out, err);
    if (*val) return cmd_validate(a, out, err);
    if (*sim) return cmd_simulate(a, out);
    if (*ana) return cmd_analyze(a, out);
    if (*ren) return cmd_render(a, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  }
  return kInputError;
}

}  // namespace pmapp
