#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "splitsim/analytic.hpp"
#include "splitsim/profiles.hpp"

namespace splitsim {

enum class CacheMode { evict_on_switch, lru_bytes };

CacheMode parse_cache_mode(const std::string& s);
std::string to_string(CacheMode m);

/// Accelerator weight cache. evict_on_switch charges a full prefix reload
/// whenever a different model ran last and the aggregate footprint exceeds
/// SRAM; lru_bytes keeps per-model byte extents under a byte-capacity LRU and
/// charges only the missing bytes.
class WeightCache {
 public:
  WeightCache(CacheMode mode, const HardwareSpec& hw);

  /// Charge for making `required_bytes` of `model`'s weights resident before
  /// service. `footprint_over_capacity` reflects the active configuration.
  double lookup_and_charge(int model, std::int64_t required_bytes,
                           bool footprint_over_capacity);

  /// Warm start: mark extents resident (used when everything fits up front).
  void preload(const std::vector<std::pair<int, std::int64_t>>& extents);

 private:
  CacheMode mode_;
  std::int64_t capacity_;
  double bandwidth_;
  int last_model_ = -1;                 // evict_on_switch state
  std::vector<std::int64_t> resident_;  // lru_bytes: bytes resident per model
  std::vector<int> recency_;            // most recent first
  std::int64_t used_ = 0;

  void touch(int model);
  void ensure_size(int model);
};

struct SimConfig {
  SystemState state;
  CacheMode cache_mode = CacheMode::evict_on_switch;
  std::uint64_t seed = 0;
  std::int64_t total_requests = 0;
  std::int64_t warmup_requests = -1;  // -1: use default_warmup(total_requests)
  std::optional<double> horizon_s;
};

/// Default warm-up: max(1000, 5% of the run).
std::int64_t default_warmup(std::int64_t total_requests);

struct ModelSimStats {
  std::string name;
  std::int64_t completed = 0;
  double mean_e2e_s = 0.0;
  double p50_e2e_s = 0.0;
  double p95_e2e_s = 0.0;
  double p99_e2e_s = 0.0;
  double mean_tpu_wait_s = 0.0;
  double mean_cpu_wait_s = 0.0;
  std::int64_t tpu_requests = 0;  // completed requests that used the accelerator
  std::int64_t tpu_misses = 0;
  double miss_fraction = 0.0;  // empirical alpha
  double cpu_mean_in_stage = 0.0;
  double cpu_mean_sojourn_s = 0.0;
};

struct SimReport {
  std::vector<ModelSimStats> models;
  std::int64_t total_completed = 0;
  double mean_latency_s = 0.0;       // pooled over all completed requests
  double weighted_latency_rate = 0.0;  // sum of observed rate * mean latency
  double tpu_busy_fraction = 0.0;
  double tpu_mean_in_stage = 0.0;
  double tpu_mean_sojourn_s = 0.0;
  double elapsed_s = 0.0;
  std::uint64_t seed = 0;
  bool truncated = false;
  bool saturated = false;

  std::string to_json(int indent = 2) const;
  std::string to_csv() const;
};

/// Deterministic event-driven two-stage pipeline: a single FCFS accelerator
/// server with the weight cache in front, then one k-server deterministic
/// pool per model. Requests are stamped with the configuration active at
/// arrival; configuration changes affect new arrivals only.
class PipelineSim {
 public:
  PipelineSim(const SystemState& state,
              const std::vector<std::vector<RatePoint>>& schedules, CacheMode cache_mode,
              std::uint64_t seed, std::int64_t arrival_budget,
              std::int64_t warmup_requests, std::optional<double> gen_horizon_s,
              std::optional<double> hard_horizon_s);

  void run_until(double t);
  void run_all();
  double now() const { return clock_; }

  void set_config(const std::vector<int>& partitions, const std::vector<int>& cores,
                  double switch_penalty_s = 0.0);
  const std::vector<std::vector<double>>& arrival_log() const { return arrival_log_; }

  struct Completion {
    double t = 0.0;
    int model = 0;
    double e2e_s = 0.0;
    bool warmup = false;
  };
  const std::vector<Completion>& completions() const { return completions_; }

  SimReport build_report() const;

 private:
  struct Request {
    int model = 0;
    int p = 0;
    bool warmup = false;
    bool missed = false;
    double arrival_s = 0.0;
    double tpu_enq_s = -1.0;
    double tpu_start_s = -1.0;
    double tpu_done_s = -1.0;
    double cpu_enq_s = -1.0;
    double cpu_start_s = -1.0;
    double done_s = -1.0;
  };

  enum class EvKind : std::uint8_t { arrival, tpu_done, cpu_done };
  struct Event {
    double t;
    std::uint64_t seq;
    EvKind kind;
    int model;
    std::int64_t req;
    bool operator>(const Event& o) const {
      if (t != o.t) return t > o.t;
      return seq > o.seq;
    }
  };

  struct ArrivalStream {
    std::mt19937_64 rng;
    std::vector<RatePoint> schedule;
    double t = 0.0;
    std::size_t seg = 0;  // entries consumed
    std::optional<double> next();
  };

  struct CpuPool {
    int capacity = 0;
    int busy = 0;
    std::queue<std::int64_t> queue;
    // Little's-law accounting
    double in_stage_time = 0.0;
    double sojourn_sum = 0.0;
    std::int64_t sojourn_count = 0;
    double busy_time = 0.0;
  };

  const SystemState& state_;
  CacheMode cache_mode_;
  WeightCache cache_;
  std::uint64_t seed_;
  std::int64_t arrival_budget_;
  std::int64_t warmup_;
  std::optional<double> gen_horizon_;
  std::optional<double> hard_horizon_;

  double clock_ = 0.0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events_;
  std::vector<ArrivalStream> streams_;
  std::vector<Request> requests_;
  std::vector<std::vector<double>> arrival_log_;
  std::vector<Completion> completions_;

  std::vector<int> cur_partitions_;
  std::vector<int> cur_cores_;
  bool over_capacity_ = false;

  bool tpu_busy_ = false;
  std::queue<std::int64_t> tpu_queue_;
  double tpu_blocked_until_ = 0.0;
  double tpu_busy_time_ = 0.0;
  double tpu_in_stage_time_ = 0.0;
  double tpu_sojourn_sum_ = 0.0;
  std::int64_t tpu_sojourn_count_ = 0;

  std::vector<CpuPool> pools_;
  std::int64_t admitted_ = 0;
  std::int64_t completed_ = 0;

  void push_event(double t, EvKind kind, int model, std::int64_t req);
  void schedule_next_arrival(int model);
  void advance_time(double t);
  void handle_arrival(const Event& ev);
  void handle_tpu_done(const Event& ev);
  void handle_cpu_done(const Event& ev);
  void try_start_tpu();
  void enqueue_cpu(std::int64_t rid);
  void try_start_cpu(int model);
  void complete(std::int64_t rid);
  void refresh_footprint();
  bool step(double limit);
};

/// Runs the pipeline under a static configuration until `total_requests`
/// arrivals have been admitted (or the horizon elapses), drains, and reports.
/// Throws ValidationError for a structurally invalid configuration or an
/// all-zero workload; queue-level overload is allowed and only flagged.
SimReport run_sim(const SimConfig& cfg);

}  // namespace splitsim
