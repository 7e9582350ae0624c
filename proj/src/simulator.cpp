#include "splitsim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

namespace splitsim {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double uniform53(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double nearest_rank(std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const std::size_t n = sorted.size();
  std::size_t idx = static_cast<std::size_t>(std::ceil(q * n));
  if (idx == 0) idx = 1;
  if (idx > n) idx = n;
  return sorted[idx - 1];
}

}  // namespace

CacheMode parse_cache_mode(const std::string& s) {
  if (s == "evict_on_switch") return CacheMode::evict_on_switch;
  if (s == "lru_bytes") return CacheMode::lru_bytes;
  throw ValidationError("unknown cache mode: " + s);
}

std::string to_string(CacheMode m) {
  return m == CacheMode::evict_on_switch ? "evict_on_switch" : "lru_bytes";
}

// --- WeightCache -------------------------------------------------------------

WeightCache::WeightCache(CacheMode mode, const HardwareSpec& hw)
    : mode_(mode),
      capacity_(hw.sram_capacity_bytes),
      bandwidth_(hw.bandwidth_bytes_per_s) {}

void WeightCache::ensure_size(int model) {
  if (model >= static_cast<int>(resident_.size()))
    resident_.resize(model + 1, 0);
}

void WeightCache::touch(int model) {
  auto it = std::find(recency_.begin(), recency_.end(), model);
  if (it != recency_.end()) recency_.erase(it);
  recency_.insert(recency_.begin(), model);
}

void WeightCache::preload(const std::vector<std::pair<int, std::int64_t>>& extents) {
  if (mode_ != CacheMode::lru_bytes) return;
  for (const auto& [model, bytes] : extents) {
    ensure_size(model);
    const std::int64_t take = std::min(bytes, capacity_ - used_);
    if (take <= 0) break;
    resident_[model] = take;
    used_ += take;
    touch(model);
  }
}

double WeightCache::lookup_and_charge(int model, std::int64_t required_bytes,
                                      bool footprint_over_capacity) {
  if (mode_ == CacheMode::evict_on_switch) {
    const bool miss = footprint_over_capacity && last_model_ != model;
    last_model_ = model;
    return miss ? static_cast<double>(required_bytes) / bandwidth_ : 0.0;
  }

  ensure_size(model);
  const std::int64_t missing = std::max<std::int64_t>(0, required_bytes - resident_[model]);
  if (missing > 0) {
    // Keep as much of this model resident as the capacity allows, evicting
    // least-recently-used extents of other models byte by byte.
    const std::int64_t target = std::min(required_bytes, capacity_);
    std::int64_t freeing = used_ - resident_[model] + target - capacity_;
    for (auto it = recency_.rbegin(); it != recency_.rend() && freeing > 0; ++it) {
      if (*it == model) continue;
      const std::int64_t take = std::min(freeing, resident_[*it]);
      resident_[*it] -= take;
      used_ -= take;
      freeing -= take;
    }
    recency_.erase(std::remove_if(recency_.begin(), recency_.end(),
                                  [&](int m) { return m != model && resident_[m] == 0; }),
                   recency_.end());
    used_ += target - resident_[model];
    resident_[model] = target;
  }
  touch(model);
  return static_cast<double>(missing) / bandwidth_;
}

// --- PipelineSim ---------------------------------------------------------------

std::optional<double> PipelineSim::ArrivalStream::next() {
  while (true) {
    while (seg < schedule.size() && schedule[seg].start_s <= t) ++seg;
    const double rate = (seg == 0) ? 0.0 : schedule[seg - 1].rate_rps;
    const double seg_end = (seg < schedule.size()) ? schedule[seg].start_s : kInf;
    if (!(rate > 0.0)) {
      if (seg_end == kInf) return std::nullopt;
      t = seg_end;
      continue;
    }
    const double gap = -std::log1p(-uniform53(rng)) / rate;
    if (t + gap < seg_end) {
      t += gap;
      return t;
    }
    t = seg_end;
  }
}

PipelineSim::PipelineSim(const SystemState& state,
                         const std::vector<std::vector<RatePoint>>& schedules,
                         CacheMode cache_mode, std::uint64_t seed,
                         std::int64_t arrival_budget, std::int64_t warmup_requests,
                         std::optional<double> gen_horizon_s,
                         std::optional<double> hard_horizon_s)
    : state_(state),
      cache_mode_(cache_mode),
      cache_(cache_mode, state.hw),
      seed_(seed),
      arrival_budget_(arrival_budget),
      warmup_(warmup_requests),
      gen_horizon_(gen_horizon_s),
      hard_horizon_(hard_horizon_s),
      cur_partitions_(state.partitions),
      cur_cores_(state.cores) {
  const std::size_t n = state_.tenants.size();
  if (schedules.size() != n)
    throw ValidationError("simulator: schedule count does not match tenant count");
  streams_.resize(n);
  pools_.resize(n);
  arrival_log_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Sub-seed per model index so adding a tenant never perturbs the arrival
    // streams of existing ones.
    streams_[i].rng.seed(splitmix64(seed ^ (0x9E3779B97F4A7C15ULL * (i + 1))));
    streams_[i].schedule = schedules[i];
    pools_[i].capacity = cur_cores_[i];
  }
  refresh_footprint();
  if (cache_mode_ == CacheMode::lru_bytes && !over_capacity_) {
    std::vector<std::pair<int, std::int64_t>> extents;
    for (std::size_t i = 0; i < n; ++i)
      if (cur_partitions_[i] > 0)
        extents.push_back({static_cast<int>(i),
                           state_.tenants[i].profile->prefix_bytes(cur_partitions_[i])});
    cache_.preload(extents);
  }
  for (std::size_t i = 0; i < n; ++i) schedule_next_arrival(static_cast<int>(i));
}

void PipelineSim::refresh_footprint() {
  std::int64_t total = 0;
  for (std::size_t i = 0; i < state_.tenants.size(); ++i)
    if (cur_partitions_[i] > 0)
      total += state_.tenants[i].profile->prefix_bytes(cur_partitions_[i]);
  over_capacity_ = total > state_.hw.sram_capacity_bytes;
}

void PipelineSim::push_event(double t, EvKind kind, int model, std::int64_t req) {
  events_.push({t, next_seq_++, kind, model, req});
}

void PipelineSim::schedule_next_arrival(int model) {
  if (arrival_budget_ >= 0 && admitted_ >= arrival_budget_) return;
  auto t = streams_[model].next();
  if (!t) return;
  if (gen_horizon_ && *t > *gen_horizon_) return;
  push_event(*t, EvKind::arrival, model, -1);
}

void PipelineSim::advance_time(double t) {
  if (t <= clock_) return;
  const double dt = t - clock_;
  tpu_in_stage_time_ += dt * (tpu_queue_.size() + (tpu_busy_ ? 1 : 0));
  for (auto& pool : pools_) pool.in_stage_time += dt * (pool.queue.size() + pool.busy);
  clock_ = t;
}

void PipelineSim::handle_arrival(const Event& ev) {
  if (arrival_budget_ >= 0 && admitted_ >= arrival_budget_) return;
  const int m = ev.model;
  Request r;
  r.model = m;
  r.p = cur_partitions_[m];
  r.warmup = admitted_ < warmup_;
  r.arrival_s = ev.t;
  ++admitted_;
  arrival_log_[m].push_back(ev.t);
  requests_.push_back(r);
  const std::int64_t rid = static_cast<std::int64_t>(requests_.size()) - 1;
  if (r.p > 0) {
    requests_[rid].tpu_enq_s = ev.t;
    tpu_queue_.push(rid);
    try_start_tpu();
  } else {
    enqueue_cpu(rid);
  }
  schedule_next_arrival(m);
}

void PipelineSim::try_start_tpu() {
  if (tpu_busy_ || tpu_queue_.empty()) return;
  const std::int64_t rid = tpu_queue_.front();
  tpu_queue_.pop();
  Request& r = requests_[rid];
  const ModelProfile& prof = *state_.tenants[r.model].profile;
  const double start = std::max(clock_, tpu_blocked_until_);
  const double charge =
      cache_.lookup_and_charge(r.model, prof.prefix_bytes(r.p), over_capacity_);
  r.missed = charge > 0.0;
  const double bw = state_.hw.bandwidth_bytes_per_s;
  const double service = static_cast<double>(prof.input_bytes) / bw + charge +
                         prof.tpu_prefix_s(r.p) +
                         static_cast<double>(prof.output_bytes(r.p)) / bw;
  r.tpu_start_s = start;
  tpu_busy_ = true;
  tpu_busy_time_ += service;
  push_event(start + service, EvKind::tpu_done, r.model, rid);
}

void PipelineSim::handle_tpu_done(const Event& ev) {
  Request& r = requests_[ev.req];
  r.tpu_done_s = ev.t;
  tpu_busy_ = false;
  tpu_sojourn_sum_ += ev.t - r.tpu_enq_s;
  ++tpu_sojourn_count_;
  if (r.p < state_.tenants[r.model].profile->max_partition())
    enqueue_cpu(ev.req);
  else
    complete(ev.req);
  try_start_tpu();
}

void PipelineSim::enqueue_cpu(std::int64_t rid) {
  Request& r = requests_[rid];
  r.cpu_enq_s = clock_;
  pools_[r.model].queue.push(rid);
  try_start_cpu(r.model);
}

void PipelineSim::try_start_cpu(int model) {
  CpuPool& pool = pools_[model];
  // Requests stamped under an older configuration may outlive a shrink to
  // zero cores; they drain on one borrowed core.
  while (!pool.queue.empty()) {
    const int capacity = pool.capacity > 0 ? pool.capacity : 1;
    if (pool.busy >= capacity) break;
    const std::int64_t rid = pool.queue.front();
    pool.queue.pop();
    Request& r = requests_[rid];
    r.cpu_start_s = clock_;
    const double service = state_.tenants[model].profile->cpu_suffix_s(r.p);
    pool.busy_time += service;
    ++pool.busy;
    push_event(clock_ + service, EvKind::cpu_done, model, rid);
  }
}

void PipelineSim::handle_cpu_done(const Event& ev) {
  CpuPool& pool = pools_[ev.model];
  --pool.busy;
  Request& r = requests_[ev.req];
  pool.sojourn_sum += ev.t - r.cpu_enq_s;
  ++pool.sojourn_count;
  complete(ev.req);
  try_start_cpu(ev.model);
}

void PipelineSim::complete(std::int64_t rid) {
  Request& r = requests_[rid];
  r.done_s = clock_;
  ++completed_;
  completions_.push_back({clock_, r.model, clock_ - r.arrival_s, r.warmup});
}

bool PipelineSim::step(double limit) {
  if (events_.empty()) return false;
  const Event ev = events_.top();
  if (ev.t > limit) return false;
  events_.pop();
  advance_time(ev.t);
  switch (ev.kind) {
    case EvKind::arrival: handle_arrival(ev); break;
    case EvKind::tpu_done: handle_tpu_done(ev); break;
    case EvKind::cpu_done: handle_cpu_done(ev); break;
  }
  return true;
}

void PipelineSim::run_until(double t) {
  const double limit = hard_horizon_ ? std::min(t, *hard_horizon_) : t;
  while (step(limit)) {
  }
  advance_time(limit);
}

void PipelineSim::run_all() {
  const double limit = hard_horizon_ ? *hard_horizon_ : kInf;
  while (step(limit)) {
  }
  if (hard_horizon_) advance_time(*hard_horizon_);
}

void PipelineSim::set_config(const std::vector<int>& partitions,
                             const std::vector<int>& cores, double switch_penalty_s) {
  cur_partitions_ = partitions;
  cur_cores_ = cores;
  refresh_footprint();
  for (std::size_t i = 0; i < pools_.size(); ++i) {
    pools_[i].capacity = cores[i];
    try_start_cpu(static_cast<int>(i));
  }
  if (switch_penalty_s > 0.0)
    tpu_blocked_until_ = std::max(tpu_blocked_until_, clock_ + switch_penalty_s);
}

SimReport PipelineSim::build_report() const {
  const std::size_t n = state_.tenants.size();
  SimReport rep;
  rep.seed = seed_;
  rep.elapsed_s = clock_;
  rep.truncated = completed_ < admitted_ ||
                  (arrival_budget_ >= 0 && admitted_ < arrival_budget_);
  rep.models.resize(n);

  std::vector<std::vector<double>> e2e(n);
  std::vector<double> tpu_wait_sum(n, 0.0), cpu_wait_sum(n, 0.0);
  double pooled_sum = 0.0;
  std::int64_t pooled_count = 0;
  for (const Request& r : requests_) {
    if (r.done_s < 0.0 || r.warmup) continue;
    auto& stats = rep.models[r.model];
    ++stats.completed;
    const double lat = r.done_s - r.arrival_s;
    e2e[r.model].push_back(lat);
    pooled_sum += lat;
    ++pooled_count;
    if (r.p > 0) {
      ++stats.tpu_requests;
      if (r.missed) ++stats.tpu_misses;
      tpu_wait_sum[r.model] += r.tpu_start_s - r.tpu_enq_s;
    }
    if (r.cpu_start_s >= 0.0) cpu_wait_sum[r.model] += r.cpu_start_s - r.cpu_enq_s;
  }

  rep.total_completed = pooled_count;
  rep.mean_latency_s = pooled_count > 0 ? pooled_sum / pooled_count : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& stats = rep.models[i];
    stats.name = state_.tenants[i].profile->name;
    if (stats.completed > 0) {
      double sum = 0.0;
      for (double v : e2e[i]) sum += v;
      stats.mean_e2e_s = sum / stats.completed;
      std::sort(e2e[i].begin(), e2e[i].end());
      stats.p50_e2e_s = nearest_rank(e2e[i], 0.50);
      stats.p95_e2e_s = nearest_rank(e2e[i], 0.95);
      stats.p99_e2e_s = nearest_rank(e2e[i], 0.99);
      stats.mean_cpu_wait_s = cpu_wait_sum[i] / stats.completed;
      if (rep.elapsed_s > 0.0)
        rep.weighted_latency_rate +=
            (static_cast<double>(stats.completed) / rep.elapsed_s) * stats.mean_e2e_s;
    }
    if (stats.tpu_requests > 0) {
      stats.mean_tpu_wait_s = tpu_wait_sum[i] / stats.tpu_requests;
      stats.miss_fraction =
          static_cast<double>(stats.tpu_misses) / stats.tpu_requests;
    }
    if (rep.elapsed_s > 0.0) {
      stats.cpu_mean_in_stage = pools_[i].in_stage_time / rep.elapsed_s;
      stats.cpu_mean_sojourn_s =
          pools_[i].sojourn_count > 0 ? pools_[i].sojourn_sum / pools_[i].sojourn_count
                                      : 0.0;
    }
  }
  if (rep.elapsed_s > 0.0) {
    rep.tpu_busy_fraction = tpu_busy_time_ / rep.elapsed_s;
    rep.tpu_mean_in_stage = tpu_in_stage_time_ / rep.elapsed_s;
  }
  rep.tpu_mean_sojourn_s =
      tpu_sojourn_count_ > 0 ? tpu_sojourn_sum_ / tpu_sojourn_count_ : 0.0;

  rep.saturated = rep.tpu_busy_fraction >= 0.98;
  for (std::size_t i = 0; i < n; ++i) {
    if (pools_[i].capacity > 0 && rep.elapsed_s > 0.0 &&
        pools_[i].busy_time / (pools_[i].capacity * rep.elapsed_s) >= 0.98)
      rep.saturated = true;
  }
  return rep;
}

// --- run_sim -----------------------------------------------------------------

std::int64_t default_warmup(std::int64_t total_requests) {
  const std::int64_t base = std::max<std::int64_t>(1000, total_requests / 20);
  return std::min(base, total_requests / 2);
}

SimReport run_sim(const SimConfig& cfg) {
  const SystemState& s = cfg.state;
  const std::size_t n = s.tenants.size();
  if (s.partitions.size() != n || s.cores.size() != n)
    throw ValidationError("run_sim: decision vectors must match tenant count");

  int core_sum = 0;
  double total_rate = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const ModelProfile& m = *s.tenants[i].profile;
    const int p = s.partitions[i];
    const int k = s.cores[i];
    if (p < 0 || p > m.max_partition())
      throw ValidationError("run_sim: partition out of range for " + m.name);
    if (p < m.max_partition() && k < 1)
      throw ValidationError("run_sim: model " + m.name + " has a CPU suffix but no core");
    if (p == m.max_partition() && k != 0)
      throw ValidationError("run_sim: model " + m.name +
                            " is fully on the accelerator but holds cores");
    if (k < 0 || k > s.hw.max_cores)
      throw ValidationError("run_sim: cores out of range for " + m.name);
    core_sum += k;
    if (s.tenants[i].rate_rps < 0.0)
      throw ValidationError("run_sim: negative rate for " + m.name);
    total_rate += s.tenants[i].rate_rps;
  }
  if (core_sum > s.hw.max_cores)
    throw ValidationError("run_sim: total cores exceed capacity");
  if (total_rate <= 0.0) throw ValidationError("run_sim: workload has zero total rate");
  if (cfg.total_requests < 1)
    throw ValidationError("run_sim: total_requests must be >= 1");
  const std::int64_t warmup = cfg.warmup_requests >= 0 ? cfg.warmup_requests
                                                       : default_warmup(cfg.total_requests);
  if (warmup >= cfg.total_requests)
    throw ValidationError("run_sim: warmup_requests must be < total_requests");

  std::vector<std::vector<RatePoint>> schedules(n);
  for (std::size_t i = 0; i < n; ++i)
    schedules[i] = {{0.0, s.tenants[i].rate_rps}};

  PipelineSim sim(s, schedules, cfg.cache_mode, cfg.seed, cfg.total_requests, warmup,
                  std::nullopt, cfg.horizon_s);
  sim.run_all();
  return sim.build_report();
}

// --- report serialization -------------------------------------------------------

std::string SimReport::to_json(int indent) const {
  json jm = json::array();
  for (const auto& m : models) {
    jm.push_back({{"name", m.name},
                  {"completed", m.completed},
                  {"mean_e2e_s", m.mean_e2e_s},
                  {"p50_e2e_s", m.p50_e2e_s},
                  {"p95_e2e_s", m.p95_e2e_s},
                  {"p99_e2e_s", m.p99_e2e_s},
                  {"mean_tpu_wait_s", m.mean_tpu_wait_s},
                  {"mean_cpu_wait_s", m.mean_cpu_wait_s},
                  {"tpu_requests", m.tpu_requests},
                  {"tpu_misses", m.tpu_misses},
                  {"miss_fraction", m.miss_fraction},
                  {"cpu_mean_in_stage", m.cpu_mean_in_stage},
                  {"cpu_mean_sojourn_s", m.cpu_mean_sojourn_s}});
  }
  json j{{"models", jm},
         {"total_completed", total_completed},
         {"mean_latency_s", mean_latency_s},
         {"weighted_latency_rate", weighted_latency_rate},
         {"tpu_busy_fraction", tpu_busy_fraction},
         {"tpu_mean_in_stage", tpu_mean_in_stage},
         {"tpu_mean_sojourn_s", tpu_mean_sojourn_s},
         {"elapsed_s", elapsed_s},
         {"seed", seed},
         {"truncated", truncated},
         {"saturated", saturated}};
  return j.dump(indent) + "\n";
}

std::string SimReport::to_csv() const {
  std::string out =
      "scope,name,completed,mean_e2e_s,p50_e2e_s,p95_e2e_s,p99_e2e_s,"
      "mean_tpu_wait_s,mean_cpu_wait_s,miss_fraction,tpu_busy_fraction,seed,"
      "truncated,saturated\n";
  char line[512];
  for (const auto& m : models) {
    std::snprintf(line, sizeof(line),
                  "model,%s,%lld,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,,%llu,,\n",
                  m.name.c_str(), static_cast<long long>(m.completed), m.mean_e2e_s,
                  m.p50_e2e_s, m.p95_e2e_s, m.p99_e2e_s, m.mean_tpu_wait_s,
                  m.mean_cpu_wait_s, m.miss_fraction,
                  static_cast<unsigned long long>(seed));
    out += line;
  }
  std::snprintf(line, sizeof(line),
                "aggregate,all,%lld,%.10g,,,,,,,%.10g,%llu,%d,%d\n",
                static_cast<long long>(total_completed), mean_latency_s,
                tpu_busy_fraction, static_cast<unsigned long long>(seed),
                truncated ? 1 : 0, saturated ? 1 : 0);
  out += line;
  return out;
}

}  // namespace splitsim
