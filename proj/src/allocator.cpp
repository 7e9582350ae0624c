#include "splitsim/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace splitsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SystemState build_state(std::span<const ModelProfile* const> models,
                        std::span<const double> rates, const HardwareSpec& hw,
                        std::span<const int> partitions, std::span<const int> cores,
                        AlphaMode mode) {
  SystemState s;
  s.hw = hw;
  s.alpha_mode = mode;
  s.tenants.reserve(models.size());
  for (std::size_t i = 0; i < models.size(); ++i)
    s.tenants.push_back({models[i], rates[i]});
  s.partitions.assign(partitions.begin(), partitions.end());
  s.cores.assign(cores.begin(), cores.end());
  return s;
}

AllocationResult finish_result(std::span<const ModelProfile* const> models,
                               std::span<const double> rates, const HardwareSpec& hw,
                               std::vector<int> partitions, std::vector<int> cores,
                               AlphaMode mode) {
  AllocationResult r;
  r.estimate = evaluate_candidate(models, rates, hw, partitions, cores, mode);
  r.partitions = std::move(partitions);
  r.cores = std::move(cores);
  r.objective = r.estimate.objective;
  r.feasible = r.estimate.feasible;
  return r;
}

}  // namespace

LatencyEstimate evaluate_candidate(std::span<const ModelProfile* const> models,
                                   std::span<const double> rates,
                                   const HardwareSpec& hw, std::span<const int> partitions,
                                   std::span<const int> cores, AlphaMode mode) {
  return objective(build_state(models, rates, hw, partitions, cores, mode));
}

std::optional<std::vector<int>> prop_alloc(std::span<const ModelProfile* const> models,
                                           std::span<const double> rates,
                                           std::span<const int> partitions,
                                           int max_cores) {
  const std::size_t n = models.size();
  std::vector<int> cores(n, 0);
  std::vector<std::size_t> suffix;
  for (std::size_t i = 0; i < n; ++i)
    if (partitions[i] < models[i]->max_partition()) suffix.push_back(i);
  if (suffix.empty()) return cores;
  if (static_cast<int>(suffix.size()) > max_cores) return std::nullopt;

  std::vector<double> load(suffix.size());
  double total = 0.0;
  for (std::size_t j = 0; j < suffix.size(); ++j) {
    const std::size_t i = suffix[j];
    load[j] = rates[i] * models[i]->cpu_suffix_s(partitions[i]);
    total += load[j];
  }

  // Largest-remainder rounding of the proportional quotas over all cores.
  std::vector<double> remainder(suffix.size());
  int assigned = 0;
  for (std::size_t j = 0; j < suffix.size(); ++j) {
    const double quota = total > 0.0 ? load[j] / total * max_cores
                                     : static_cast<double>(max_cores) / suffix.size();
    const int floor_q = static_cast<int>(std::floor(quota));
    cores[suffix[j]] = floor_q;
    remainder[j] = quota - floor_q;
    assigned += floor_q;
  }
  std::vector<std::size_t> order(suffix.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainder[a] > remainder[b];
  });
  for (std::size_t j = 0; assigned < max_cores && j < order.size(); ++j, ++assigned)
    ++cores[suffix[order[j]]];

  // Constraint repair: every suffix model needs at least one core; take from
  // the currently largest holder.
  for (std::size_t j = 0; j < suffix.size(); ++j) {
    if (cores[suffix[j]] >= 1) continue;
    std::size_t donor = suffix[0];
    for (std::size_t i : suffix)
      if (cores[i] > cores[donor]) donor = i;
    --cores[donor];
    cores[suffix[j]] = 1;
  }
  return cores;
}

AllocationResult greedy_optimize(std::span<const ModelProfile* const> models,
                                 std::span<const double> rates, const HardwareSpec& hw,
                                 AlphaMode mode) {
  const std::size_t n = models.size();
  const int kmax = hw.max_cores;

  std::vector<int> partitions(n, 0);
  // More models than cores: the all-CPU start would violate the one-core-per-
  // suffix rule, so the lightest CPU loads begin fully on the accelerator.
  if (static_cast<int>(n) > kmax) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return rates[a] * models[a]->cpu_suffix_s(0) < rates[b] * models[b]->cpu_suffix_s(0);
    });
    for (std::size_t j = 0; j < n - static_cast<std::size_t>(kmax); ++j)
      partitions[order[j]] = models[order[j]]->max_partition();
  }

  // The all-CPU start may be unstable outright (offered core load above the
  // pool size). Shift the most overloaded suffix accelerator-ward until every
  // pool can carry its load; the main loop cannot escape an all-infinite
  // neighborhood on its own.
  while (true) {
    auto k = prop_alloc(models, rates, partitions, kmax);
    if (!k) break;
    int worst = -1;
    double worst_excess = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (partitions[i] >= models[i]->max_partition()) continue;
      const double offered = rates[i] * models[i]->cpu_suffix_s(partitions[i]);
      const double excess = offered - (*k)[i];
      if (offered >= (*k)[i] && (worst < 0 || excess > worst_excess)) {
        worst_excess = excess;
        worst = static_cast<int>(i);
      }
    }
    if (worst < 0) break;
    ++partitions[worst];
  }

  auto cores_opt = prop_alloc(models, rates, partitions, kmax);
  std::vector<int> cores = cores_opt ? *cores_opt : std::vector<int>(n, 0);
  double current =
      cores_opt ? evaluate_candidate(models, rates, hw, partitions, cores, mode).objective
                : kInf;

  AllocationResult result;
  int step = 0;
  while (true) {
    double best = kInf;
    int best_m = -1, best_h = 0;
    std::vector<int> best_cores;
    std::vector<int> candidate = partitions;
    for (std::size_t m = 0; m < n; ++m) {
      for (int h = 1; h <= 2; ++h) {
        if (partitions[m] + h > models[m]->max_partition()) continue;
        candidate[m] = partitions[m] + h;
        auto k = prop_alloc(models, rates, candidate, kmax);
        if (k) {
          const double obj =
              evaluate_candidate(models, rates, hw, candidate, *k, mode).objective;
          if (obj < best) {
            best = obj;
            best_m = static_cast<int>(m);
            best_h = h;
            best_cores = std::move(*k);
          }
        }
      }
      candidate[m] = partitions[m];
    }
    if (!(best < current)) break;
    partitions[best_m] += best_h;
    cores = std::move(best_cores);
    current = best;
    result.trace.push_back({++step, best_m, best_h, best});
  }

  result.iterations = step;
  AllocationResult final =
      finish_result(models, rates, hw, std::move(partitions), std::move(cores), mode);
  final.iterations = result.iterations;
  final.trace = std::move(result.trace);
  return final;
}

AllocationResult brute_force_optimize(std::span<const ModelProfile* const> models,
                                      std::span<const double> rates,
                                      const HardwareSpec& hw, AlphaMode mode,
                                      std::int64_t guard) {
  const std::size_t n = models.size();
  const int kmax = hw.max_cores;

  // Candidate estimate: partition vectors times core assignments with sum <=
  // kmax, i.e. C(kmax + n, n) compositions.
  double partition_count = 1.0;
  for (std::size_t i = 0; i < n; ++i) partition_count *= models[i]->max_partition() + 1;
  double compositions = 1.0;
  for (std::size_t i = 1; i <= n; ++i)
    compositions = compositions * (kmax + i) / i;
  if (partition_count * compositions > static_cast<double>(guard))
    throw GuardError("brute force search space exceeds guard of " +
                     std::to_string(guard) + " candidates");

  std::vector<int> partitions(n, 0), cores(n, 0);
  std::vector<int> best_partitions, best_cores;
  double best = kInf;
  bool have_any = false;

  auto consider = [&](const std::vector<int>& p, const std::vector<int>& k) {
    const double obj = evaluate_candidate(models, rates, hw, p, k, mode).objective;
    if (!have_any || obj < best) {
      have_any = true;
      best = obj;
      best_partitions = p;
      best_cores = k;
    }
  };

  // Enumerate core assignments for the current partition vector in
  // lexicographic order; suffix models take 1..budget cores each.
  auto enumerate_cores = [&](auto&& self, std::size_t idx, int budget) -> void {
    if (idx == n) {
      consider(partitions, cores);
      return;
    }
    if (partitions[idx] == models[idx]->max_partition()) {
      cores[idx] = 0;
      self(self, idx + 1, budget);
      return;
    }
    int tail_need = 0;
    for (std::size_t j = idx + 1; j < n; ++j)
      if (partitions[j] < models[j]->max_partition()) ++tail_need;
    for (int k = 1; k <= budget - tail_need && k <= kmax; ++k) {
      cores[idx] = k;
      self(self, idx + 1, budget - k);
    }
    cores[idx] = 0;
  };

  // Odometer over partition vectors, lexicographic ascending.
  while (true) {
    int suffix_count = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (partitions[i] < models[i]->max_partition()) ++suffix_count;
    if (suffix_count <= kmax) enumerate_cores(enumerate_cores, 0, kmax);

    std::size_t pos = n;
    while (pos > 0) {
      --pos;
      if (partitions[pos] < models[pos]->max_partition()) {
        ++partitions[pos];
        std::fill(partitions.begin() + pos + 1, partitions.end(), 0);
        break;
      }
      if (pos == 0) {
        pos = n;  // exhausted
        break;
      }
    }
    if (pos == n || n == 0) break;
  }

  if (!have_any) {
    // No structurally valid candidate (cannot happen with kmax >= 1).
    return finish_result(models, rates, hw, std::vector<int>(n, 0),
                         std::vector<int>(n, 0), mode);
  }
  return finish_result(models, rates, hw, std::move(best_partitions),
                       std::move(best_cores), mode);
}

int threshold_baseline(const ModelProfile& m, double threshold_pct) {
  const double factor = 1.0 + threshold_pct / 100.0;
  int p = m.max_partition();
  while (p > 0) {
    const double tpu_delta = m.tpu_prefix_s(p) - m.tpu_prefix_s(p - 1);
    const double cpu_delta = m.cpu_suffix_s(p - 1) - m.cpu_suffix_s(p);
    if (cpu_delta <= factor * tpu_delta)
      --p;
    else
      break;
  }
  return p;
}

AllocationResult compiler_baseline(std::span<const ModelProfile* const> models,
                                   std::span<const double> rates, const HardwareSpec& hw,
                                   AlphaMode mode) {
  std::vector<int> partitions(models.size());
  for (std::size_t i = 0; i < models.size(); ++i)
    partitions[i] = models[i]->max_partition();
  return finish_result(models, rates, hw, std::move(partitions),
                       std::vector<int>(models.size(), 0), mode);
}

AllocationResult threshold_config(std::span<const ModelProfile* const> models,
                                  std::span<const double> rates, const HardwareSpec& hw,
                                  double threshold_pct, AlphaMode mode) {
  const std::size_t n = models.size();
  std::vector<int> partitions(n);
  for (std::size_t i = 0; i < n; ++i)
    partitions[i] = threshold_baseline(*models[i], threshold_pct);
  auto cores = prop_alloc(models, rates, partitions, hw.max_cores);
  if (!cores)
    return finish_result(models, rates, hw, std::move(partitions),
                         std::vector<int>(n, 0), mode);
  return finish_result(models, rates, hw, std::move(partitions), std::move(*cores),
                       mode);
}

}  // namespace splitsim
