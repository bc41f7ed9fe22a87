#include "pmapp/flowsim.hpp"

#include "pmapp/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace pmapp {

void ArrivalModel::check() const {
  if (!(c >= 0.0) || !(lambda > 0.0) || !(horizon > 0.0) || !std::isfinite(c) ||
      !std::isfinite(lambda) || !std::isfinite(horizon)) {
    throw Error(ErrorKind::kInvalidArgument, "arrival model needs c >= 0, lambda > 0, horizon > 0");
  }
}

std::size_t StreamTrace::total() const {
  std::size_t n = 0;
  for (const auto& s : streams) n += s.size();
  return n;
}

StreamTrace sample_arrivals(const ArrivalModel& model, int streams) {
  model.check();
  if (streams < 1) throw Error(ErrorKind::kInvalidArgument, "need at least one stream");
  StreamTrace trace{model, std::vector<std::vector<double>>(streams)};
  for (int n = 0; n < streams; ++n) {
    std::seed_seq seq{static_cast<std::uint32_t>(model.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(model.seed >> 32),
                      static_cast<std::uint32_t>(n)};
    std::mt19937_64 rng(seq);
    std::exponential_distribution<double> gap(model.lambda);
    double t = 0.0;
    while (true) {
      double next = t + model.c + gap(rng);
      if (next <= t) next = std::nextafter(t, std::numeric_limits<double>::infinity());
      if (next > model.horizon) break;
      trace.streams[n].push_back(next);
      t = next;
    }
  }
  return trace;
}

QueueConfig QueueConfig::bounded(int cap) {
  if (cap < 1) throw Error(ErrorKind::kInvalidArgument, "queue capacity must be >= 1");
  return QueueConfig{cap};
}

Dispatcher::Dispatcher(int streams, double tau, QueueConfig queue)
    : tau_(tau), queue_(queue), last_(streams), waiting_(streams) {
  if (!(tau > 0.0)) throw Error(ErrorKind::kInvalidArgument, "period must be positive");
  if (queue_.capacity && *queue_.capacity < 1) {
    throw Error(ErrorKind::kInvalidArgument, "queue capacity must be >= 1");
  }
}

int Dispatcher::queued(int n, double t) const {
  const auto& w = waiting_[n];
  return static_cast<int>(w.end() - std::upper_bound(w.begin(), w.end(), t));
}

std::optional<Dispatcher::Assignment> Dispatcher::assign(double t, int n) {
  if (n < 0 || n >= static_cast<int>(last_.size())) {
    throw Error(ErrorKind::kInvalidArgument, "stream index out of range");
  }
  const long ceil_period = static_cast<long>(std::ceil(t / tau_));
  long period = ceil_period;
  if (last_[n] && *last_[n] >= period) period = *last_[n] + 1;
  const bool queued_agent = period > ceil_period;
  auto& w = waiting_[n];
  w.erase(w.begin(), std::upper_bound(w.begin(), w.end(), t));
  if (queued_agent) {
    if (queue_.capacity && static_cast<int>(w.size()) >= *queue_.capacity) return std::nullopt;
    w.push_back(period * tau_);
  }
  last_[n] = period;
  return Assignment{period, period * tau_, queued_agent};
}

namespace {

struct Departure {
  int stream;
  int slot;
  double start;
};

}  // namespace

SimMetrics simulate(const PeriodicPlan& plan, const StreamTrace& trace, const QueueConfig& queue,
                    const SimOptions& options) {
  const ValidationReport report = validate_plan(plan, options.validation_tol);
  if (!report.ok) throw Error(ErrorKind::kInvalidPlan, "plan fails validation");
  const int nstreams = plan.streams();
  if (static_cast<int>(trace.streams.size()) != nstreams) {
    throw Error(ErrorKind::kInvalidArgument, "trace stream count does not match the plan");
  }
  const double horizon = trace.model.horizon;

  std::vector<double> shortest(nstreams);
  for (int n = 0; n < nstreams; ++n) shortest[n] = shortest_path(plan.env, n).length / plan.v_max;

  // Events in (time, stream) order; streams are independent queues, so the
  // merged order only matters for determinism of the departure list.
  struct Arrival {
    double t;
    int stream;
  };
  std::vector<Arrival> arrivals;
  for (int n = 0; n < nstreams; ++n) {
    for (double t : trace.streams[n]) arrivals.push_back({t, n});
  }
  std::stable_sort(arrivals.begin(), arrivals.end(), [](const Arrival& a, const Arrival& b) {
    return a.t < b.t || (a.t == b.t && a.stream < b.stream);
  });

  Dispatcher dispatcher(nstreams, plan.tau, queue);
  SimMetrics m;
  m.streams.assign(nstreams, {});
  std::vector<double> waits;
  std::vector<Departure> departures;
  double delay_sum = 0.0;
  std::vector<double> stream_delay(nstreams, 0.0), stream_wait(nstreams, 0.0);

  for (const Arrival& a : arrivals) {
    StreamMetrics& sm = m.streams[a.stream];
    ++sm.arrivals;
    const auto got = dispatcher.assign(a.t, a.stream);
    if (!got) {
      ++sm.failed;
      ++m.failed;
      continue;
    }
    ++sm.served;
    ++m.served;
    if (got->departure > horizon) continue;
    const int slot = static_cast<int>(((got->period % plan.cycle) + plan.cycle) % plan.cycle);
    const double travel = plan.at(a.stream, slot).duration();
    const double wait = got->departure - a.t;
    const double delay = got->departure + travel - a.t - shortest[a.stream];
    ++sm.entered;
    ++m.entered;
    waits.push_back(wait);
    delay_sum += delay;
    stream_delay[a.stream] += delay;
    stream_wait[a.stream] += wait;
    departures.push_back({a.stream, slot, got->departure});
  }

  m.throughput = m.entered / horizon;
  if (m.entered > 0) {
    m.average_delay = delay_sum / m.entered;
    double sum = 0.0;
    for (double w : waits) sum += w;
    m.mean_wait = sum / m.entered;
    double var = 0.0;
    for (double w : waits) var += (w - m.mean_wait) * (w - m.mean_wait);
    if (m.entered > 1) m.wait_stderr = std::sqrt(var / (m.entered - 1) / m.entered);
  }
  for (int n = 0; n < nstreams; ++n) {
    StreamMetrics& sm = m.streams[n];
    sm.throughput = sm.entered / horizon;
    if (sm.entered > 0) {
      sm.average_delay = stream_delay[n] / sm.entered;
      sm.mean_wait = stream_wait[n] / sm.entered;
    }
  }

  // Spot checks: positions of every agent on the map at evenly spaced instants.
  m.min_separation = std::numeric_limits<double>::infinity();
  double end = 0.0;
  for (const Departure& d : departures) {
    end = std::max(end, d.start + plan.at(d.stream, d.slot).duration());
  }
  std::sort(departures.begin(), departures.end(),
            [](const Departure& a, const Departure& b) { return a.start < b.start; });
  double longest = 0.0;
  for (const Trajectory& tr : plan.trajectories) longest = std::max(longest, tr.duration());
  const int checks = departures.empty() ? 0 : std::max(0, options.spot_checks);
  std::vector<Point> moving;
  for (int i = 0; i < checks; ++i) {
    const double t = (i + 0.5) * end / checks;
    moving.clear();
    auto it = std::lower_bound(departures.begin(), departures.end(), t - longest,
                               [](const Departure& d, double v) { return d.start < v; });
    for (; it != departures.end() && it->start <= t; ++it) {
      const Trajectory& tr = plan.at(it->stream, it->slot);
      if (t - it->start <= tr.duration()) moving.push_back(tr.position_at(t - it->start));
    }
    for (size_t p = 0; p < moving.size(); ++p) {
      for (size_t q = p + 1; q < moving.size(); ++q) {
        m.min_separation = std::min(m.min_separation, (moving[p] - moving[q]).norm());
      }
    }
    ++m.spot_checks;
  }
  if (m.min_separation < 2.0 * plan.radius - options.validation_tol) {
    std::ostringstream msg;
    msg << "agents came within " << m.min_separation << " of each other during simulation";
    throw Error(ErrorKind::kInvalidPlan, msg.str());
  }
  return m;
}

QueuePrediction mdi_prediction(double lambda, double c, double tau) {
  if (!(lambda > 0.0) || !(c >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "need lambda > 0 and c >= 0");
  }
  if (!(tau > c)) throw Error(ErrorKind::kInvalidArgument, "period must exceed c");
  const double d = tau - c;
  const double rho = d * lambda;
  if (rho >= 1.0) {
    std::ostringstream msg;
    msg << "queue is unstable: rho = " << rho;
    throw Error(ErrorKind::kUnstableQueue, msg.str());
  }
  const double w_prime = d + rho / (2.0 * (1.0 - rho)) * d;
  return {d, rho, w_prime, w_prime + c};
}

}  // namespace pmapp
