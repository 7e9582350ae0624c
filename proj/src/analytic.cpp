#include "splitsim/analytic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace splitsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_state_shape(const SystemState& s) {
  if (s.partitions.size() != s.tenants.size() || s.cores.size() != s.tenants.size())
    throw std::invalid_argument("SystemState: decision vectors must match tenant count");
}

// Miss probability without the p>0 / rate>0 precondition checks; used where
// callers have already guarded (p=0 tenants simply never miss).
double alpha_unchecked(const SystemState& s, int i, double lambda_tpu,
                       std::int64_t footprint, int tpu_tenants) {
  if (s.alpha_mode == AlphaMode::zero) return 0.0;
  if (s.partitions[i] <= 0) return 0.0;
  if (footprint <= s.hw.sram_capacity_bytes) return 0.0;
  if (tpu_tenants == 1) return 0.0;
  if (lambda_tpu <= 0.0) return 0.0;
  return 1.0 - s.tenants[i].rate_rps / lambda_tpu;
}

int count_tpu_tenants(const SystemState& s) {
  int n = 0;
  for (int p : s.partitions) n += (p > 0);
  return n;
}

struct TpuMoments {
  double mean = 0.0;
  double second = 0.0;
};

TpuMoments moments_unchecked(const SystemState& s, double lambda_tpu) {
  const std::int64_t footprint = tpu_footprint_bytes(s);
  const int tenants_on_tpu = count_tpu_tenants(s);
  TpuMoments m;
  for (std::size_t i = 0; i < s.tenants.size(); ++i) {
    const int p = s.partitions[i];
    if (p <= 0) continue;
    const double share = s.tenants[i].rate_rps / lambda_tpu;
    if (share <= 0.0) continue;
    const double a = alpha_unchecked(s, static_cast<int>(i), lambda_tpu, footprint,
                                     tenants_on_tpu);
    const double load = t_load(*s.tenants[i].profile, p, s.hw);
    const double svc = s.tenants[i].profile->tpu_prefix_s(p);
    m.mean += share * (a * load + svc);
    m.second += share * (a * (load + svc) * (load + svc) + (1.0 - a) * svc * svc);
  }
  return m;
}

}  // namespace

AlphaMode parse_alpha_mode(const std::string& s) {
  if (s == "full") return AlphaMode::full;
  if (s == "zero") return AlphaMode::zero;
  throw ValidationError("unknown alpha mode: " + s);
}

std::string to_string(AlphaMode m) {
  return m == AlphaMode::full ? "full" : "zero";
}

int SystemState::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < tenants.size(); ++i)
    if (tenants[i].profile->name == name) return static_cast<int>(i);
  return -1;
}

SystemState make_system_state(const ProfileSet& set,
                              const std::vector<std::pair<std::string, double>>& rates,
                              const Configuration& cfg, AlphaMode mode) {
  SystemState s;
  s.hw = set.hardware;
  s.alpha_mode = mode;
  for (const auto& [name, rate] : rates) {
    const int idx = set.index_of(name);
    if (idx < 0) throw ValidationError("unknown model in rates: " + name);
    if (rate < 0.0) throw ValidationError("negative rate for model " + name);
    if (s.index_of(name) >= 0) throw ValidationError("duplicate model in rates: " + name);
    s.tenants.push_back({&set.models[idx], rate});
    auto pit = cfg.partitions.find(name);
    if (pit == cfg.partitions.end())
      throw ValidationError("configuration missing partition for " + name);
    s.partitions.push_back(pit->second);
    auto kit = cfg.cores.find(name);
    s.cores.push_back(kit == cfg.cores.end() ? 0 : kit->second);
  }
  return s;
}

double tpu_aggregate_rate(const SystemState& s) {
  check_state_shape(s);
  double sum = 0.0;
  for (std::size_t i = 0; i < s.tenants.size(); ++i)
    if (s.partitions[i] > 0) sum += s.tenants[i].rate_rps;
  return sum;
}

std::int64_t tpu_footprint_bytes(const SystemState& s) {
  check_state_shape(s);
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < s.tenants.size(); ++i)
    if (s.partitions[i] > 0)
      sum += s.tenants[i].profile->prefix_bytes(s.partitions[i]);
  return sum;
}

double weight_miss_prob(const SystemState& s, int model_idx) {
  check_state_shape(s);
  if (model_idx < 0 || model_idx >= static_cast<int>(s.tenants.size()))
    throw std::invalid_argument("weight_miss_prob: model index out of range");
  if (s.partitions[model_idx] <= 0)
    throw std::invalid_argument("weight_miss_prob: model has no accelerator prefix");
  const double lambda_tpu = tpu_aggregate_rate(s);
  if (lambda_tpu <= 0.0)
    throw std::invalid_argument("weight_miss_prob: aggregate accelerator rate is zero");
  return alpha_unchecked(s, model_idx, lambda_tpu, tpu_footprint_bytes(s),
                         count_tpu_tenants(s));
}

std::pair<double, double> tpu_service_moments(const SystemState& s) {
  check_state_shape(s);
  const double lambda_tpu = tpu_aggregate_rate(s);
  if (lambda_tpu <= 0.0)
    throw std::invalid_argument("tpu_service_moments: no accelerator traffic");
  const TpuMoments m = moments_unchecked(s, lambda_tpu);
  return {m.mean, m.second};
}

double tpu_wait(const SystemState& s) {
  check_state_shape(s);
  const double lambda_tpu = tpu_aggregate_rate(s);
  if (lambda_tpu <= 0.0)
    throw std::invalid_argument("tpu_wait: no accelerator traffic");
  const TpuMoments m = moments_unchecked(s, lambda_tpu);
  const double rho = lambda_tpu * m.mean;
  if (rho >= 1.0) return kInf;
  return lambda_tpu * m.second / (2.0 * (1.0 - rho));
}

double cpu_wait(double rate_rps, double suffix_s, int cores) {
  if (!(suffix_s > 0.0)) throw std::invalid_argument("cpu_wait: suffix_s must be > 0");
  if (cores < 1) throw std::invalid_argument("cpu_wait: cores must be >= 1");
  if (rate_rps < 0.0) throw std::invalid_argument("cpu_wait: negative rate");
  if (rate_rps == 0.0) return 0.0;
  const double mu = 1.0 / suffix_s;
  const double kmu = cores * mu;
  if (rate_rps >= kmu) return kInf;
  return 0.5 * (1.0 / (kmu - rate_rps) - 1.0 / kmu);
}

double e2e_latency(const SystemState& s, int model_idx) {
  check_state_shape(s);
  if (model_idx < 0 || model_idx >= static_cast<int>(s.tenants.size()))
    throw std::invalid_argument("e2e_latency: model index out of range");

  const ModelProfile& m = *s.tenants[model_idx].profile;
  const int p = s.partitions[model_idx];
  const int P = m.max_partition();
  double total = 0.0;

  if (p > 0) {
    const double lambda_tpu = tpu_aggregate_rate(s);
    const double wait = (lambda_tpu > 0.0) ? tpu_wait(s) : 0.0;
    const double a =
        (lambda_tpu > 0.0)
            ? alpha_unchecked(s, model_idx, lambda_tpu, tpu_footprint_bytes(s),
                              count_tpu_tenants(s))
            : 0.0;
    total += static_cast<double>(m.input_bytes) / s.hw.bandwidth_bytes_per_s;
    total += wait;
    total += a * t_load(m, p, s.hw);
    total += m.tpu_prefix_s(p);
    total += static_cast<double>(m.output_bytes(p)) / s.hw.bandwidth_bytes_per_s;
  }
  if (p < P) {
    total += cpu_wait(s.tenants[model_idx].rate_rps, m.cpu_suffix_s(p),
                      s.cores[model_idx]);
    total += m.cpu_suffix_s(p);
  }
  return total;
}

LatencyEstimate objective(const SystemState& s) {
  check_state_shape(s);
  const std::size_t n = s.tenants.size();
  LatencyEstimate est;
  est.e2e_s.assign(n, 0.0);
  est.cpu_wait_s.assign(n, 0.0);
  est.alpha.assign(n, 0.0);

  // Constraints: partition bounds, core bounds, core/suffix coupling, and the
  // shared core capacity.
  int core_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const ModelProfile& m = *s.tenants[i].profile;
    const int p = s.partitions[i];
    const int k = s.cores[i];
    core_sum += k;
    if (p < 0 || p > m.max_partition())
      est.violations.push_back("partition out of range for " + m.name);
    else {
      if (p < m.max_partition() && k < 1)
        est.violations.push_back("model " + m.name + " has a CPU suffix but no core");
      if (p == m.max_partition() && k != 0)
        est.violations.push_back("model " + m.name +
                                 " is fully on the accelerator but holds cores");
    }
    if (k < 0 || k > s.hw.max_cores)
      est.violations.push_back("cores out of range for " + m.name);
    if (s.tenants[i].rate_rps < 0.0)
      est.violations.push_back("negative rate for " + m.name);
  }
  if (core_sum > s.hw.max_cores)
    est.violations.push_back("total cores exceed capacity");

  if (!est.violations.empty()) {
    est.feasible = false;
    est.objective = kInf;
    std::fill(est.e2e_s.begin(), est.e2e_s.end(), kInf);
    return est;
  }

  const double lambda_tpu = tpu_aggregate_rate(s);
  const std::int64_t footprint = tpu_footprint_bytes(s);
  const int tenants_on_tpu = count_tpu_tenants(s);

  double wait_tpu = 0.0;
  if (lambda_tpu > 0.0) {
    const TpuMoments m = moments_unchecked(s, lambda_tpu);
    est.tpu_utilization = lambda_tpu * m.mean;
    if (est.tpu_utilization >= 1.0) {
      wait_tpu = kInf;
      est.violations.push_back("accelerator utilization >= 1");
    } else {
      wait_tpu = lambda_tpu * m.second / (2.0 * (1.0 - est.tpu_utilization));
    }
  }
  est.tpu_wait_s = wait_tpu;

  double obj = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const ModelProfile& m = *s.tenants[i].profile;
    const int p = s.partitions[i];
    const int P = m.max_partition();
    double e2e = 0.0;
    if (p > 0) {
      const double a = alpha_unchecked(s, static_cast<int>(i), lambda_tpu, footprint,
                                       tenants_on_tpu);
      est.alpha[i] = a;
      e2e += static_cast<double>(m.input_bytes) / s.hw.bandwidth_bytes_per_s;
      e2e += wait_tpu;
      e2e += a * t_load(m, p, s.hw);
      e2e += m.tpu_prefix_s(p);
      e2e += static_cast<double>(m.output_bytes(p)) / s.hw.bandwidth_bytes_per_s;
    }
    if (p < P) {
      const double w = cpu_wait(s.tenants[i].rate_rps, m.cpu_suffix_s(p), s.cores[i]);
      if (std::isinf(w))
        est.violations.push_back("CPU pool of " + m.name + " is unstable");
      est.cpu_wait_s[i] = w;
      e2e += w + m.cpu_suffix_s(p);
    }
    est.e2e_s[i] = e2e;
    if (s.tenants[i].rate_rps > 0.0) obj += s.tenants[i].rate_rps * e2e;
  }

  est.feasible = est.violations.empty() && std::isfinite(obj);
  est.objective = est.feasible ? obj : kInf;
  return est;
}

}  // namespace splitsim
