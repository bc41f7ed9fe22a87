#pragma once

#include "pmapp/plan.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace pmapp {

/// Inter-arrival gaps are c + Exp(lambda).
struct ArrivalModel {
  double c = 1.0;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  double horizon = 1000.0;

  void check() const;
};

struct StreamTrace {
  ArrivalModel model;
  std::vector<std::vector<double>> streams;  // strictly increasing per stream

  std::size_t total() const;
};

/// Each stream draws from its own generator seeded with (seed, stream).
StreamTrace sample_arrivals(const ArrivalModel& model, int streams);

struct QueueConfig {
  std::optional<int> capacity;  // nullopt: unbounded

  static QueueConfig unbounded() { return {}; }
  static QueueConfig bounded(int cap);
};

/// Per-stream state: last period handed out and the departure times of
/// agents that had to queue for a later period.
class Dispatcher {
 public:
  Dispatcher(int streams, double tau, QueueConfig queue);

  struct Assignment {
    long period;
    double departure;  // period * tau
    bool queued;       // assigned later than ceil(t / tau)
  };

  /// Assignment for an agent appearing at `t` on stream `n`, or nullopt when
  /// it would have to queue and the queue is full. Calls must come in
  /// nondecreasing t per stream.
  std::optional<Assignment> assign(double t, int n);

  int queued(int n, double t) const;

 private:
  double tau_;
  QueueConfig queue_;
  std::vector<std::optional<long>> last_;
  std::vector<std::vector<double>> waiting_;  // departure times of queued agents
};

struct StreamMetrics {
  int arrivals = 0;
  int served = 0;
  int failed = 0;
  int entered = 0;  // departed within the horizon
  double throughput = 0.0;
  double average_delay = 0.0;
  double mean_wait = 0.0;
};

struct SimMetrics {
  double throughput = 0.0;     // agents entering per unit time, all streams
  double average_delay = 0.0;  // over agents that entered within the horizon
  int served = 0;              // assigned a period (including still queued at the horizon)
  int failed = 0;              // turned away by a full queue
  int entered = 0;
  double mean_wait = 0.0;      // departure - appearance, agents that entered
  double wait_stderr = 0.0;
  double min_separation = 0.0;  // smallest distance seen by the spot checks
  int spot_checks = 0;
  std::vector<StreamMetrics> streams;
};

struct SimOptions {
  double validation_tol = 1e-3;
  int spot_checks = 200;  // sampled instants for the separation check
};

/// Throws invalid-plan if the plan fails validation or the spot checks find
/// two moving agents closer than 2r - tol.
SimMetrics simulate(const PeriodicPlan& plan, const StreamTrace& trace, const QueueConfig& queue,
                    const SimOptions& options = {});

struct QueuePrediction {
  double D;
  double rho;
  double W_prime;
  double W;
};

/// M/D/1 with service D = tau - c. Throws invalid-argument if tau <= c and
/// unstable-queue if rho >= 1.
QueuePrediction mdi_prediction(double lambda, double c, double tau);

}  // namespace pmapp
