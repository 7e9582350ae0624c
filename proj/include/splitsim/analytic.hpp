#pragma once

#include <string>
#include <utility>
#include <vector>

#include "splitsim/profiles.hpp"

namespace splitsim {

/// Whether inter-model weight misses are priced into the model. `zero`
/// reproduces the swap-blind variant used as a comparison baseline.
enum class AlphaMode { full, zero };

AlphaMode parse_alpha_mode(const std::string& s);
std::string to_string(AlphaMode m);

struct Tenant {
  const ModelProfile* profile = nullptr;
  double rate_rps = 0.0;
};

/// Immutable snapshot of everything the latency model needs: the co-resident
/// models with their request rates, the hardware, and the decision variables
/// (index-aligned with `tenants`).
struct SystemState {
  std::vector<Tenant> tenants;
  HardwareSpec hw;
  std::vector<int> partitions;
  std::vector<int> cores;
  AlphaMode alpha_mode = AlphaMode::full;

  int index_of(const std::string& name) const;  // -1 when absent
};

/// Builds an index-aligned state from named inputs. Throws ValidationError on
/// duplicate/unknown model names, negative rates, or missing config entries.
SystemState make_system_state(const ProfileSet& set,
                              const std::vector<std::pair<std::string, double>>& rates,
                              const Configuration& cfg,
                              AlphaMode mode = AlphaMode::full);

struct LatencyEstimate {
  std::vector<double> e2e_s;       // per tenant
  std::vector<double> cpu_wait_s;  // per tenant (0 without a CPU suffix)
  std::vector<double> alpha;       // per tenant (0 without an accelerator prefix)
  double tpu_wait_s = 0.0;
  double tpu_utilization = 0.0;
  double objective = 0.0;
  bool feasible = true;
  std::vector<std::string> violations;
};

/// Aggregate accelerator arrival rate: sum of rates over tenants with p > 0.
double tpu_aggregate_rate(const SystemState& s);

/// Aggregate accelerator weight footprint over tenants with p > 0.
std::int64_t tpu_footprint_bytes(const SystemState& s);

/// Weight miss probability for one tenant. Zero when the aggregate footprint
/// fits in SRAM or the tenant is alone on the accelerator; otherwise the
/// conservative every-intervening-request-evicts bound 1 - rate/total.
/// Requires p > 0 for the tenant and a positive aggregate accelerator rate.
double weight_miss_prob(const SystemState& s, int model_idx);

/// Mean and second moment of the accelerator service time: a two-point
/// mixture per tenant (reload + prefix with probability alpha, bare prefix
/// otherwise), mixed across tenants by their rate shares.
std::pair<double, double> tpu_service_moments(const SystemState& s);

/// Mean accelerator queueing delay (M/G/1 FCFS). Infinity once utilization
/// reaches 1.
double tpu_wait(const SystemState& s);

/// Mean CPU queueing delay of a k-server deterministic-service pool:
/// (1/2) * (1/(k*mu - rate) - 1/(k*mu)) with mu = 1/suffix_s.
/// Infinity when rate >= k*mu. Exact for k = 1.
double cpu_wait(double rate_rps, double suffix_s, int cores);

/// Expected end-to-end latency of one tenant: the accelerator bracket (input
/// transfer, queue wait, expected reload, prefix service, output transfer)
/// when p > 0, plus the CPU bracket (pool wait, suffix service) when p < P.
double e2e_latency(const SystemState& s, int model_idx);

/// Rate-weighted aggregate latency plus the full per-tenant breakdown.
/// Constraint violations and queue instability yield objective = +inf and
/// feasible = false; infeasibility is a value, not an error.
LatencyEstimate objective(const SystemState& s);

}  // namespace splitsim
