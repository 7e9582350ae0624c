#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "splitsim/analytic.hpp"
#include "splitsim/profiles.hpp"

namespace fixtures {

inline splitsim::HardwareSpec default_hw() { return {8'000'000, 320e6, 4}; }

inline splitsim::ModelProfile explicit_profile(
    std::string name, std::int64_t input_bytes,
    std::vector<splitsim::PartitionPoint> points) {
  splitsim::ModelProfile m;
  m.name = std::move(name);
  m.input_bytes = input_bytes;
  m.points = std::move(points);
  splitsim::validate(m);
  return m;
}

// A model whose first segment is slow on the accelerator but cheap on the
// CPU, while the second segment is the reverse: the single-step move from
// p = 0 raises latency, the double-step move lowers it.
inline splitsim::ModelProfile lookahead_trap_model() {
  return explicit_profile("trap", 100'000,
                          {{0, 0.00, 0.30, 0},
                           {2'000'000, 0.10, 0.28, 50'000},
                           {4'000'000, 0.11, 0.03, 25'000},
                           {6'000'000, 0.12, 0.00, 4'000}});
}

inline splitsim::ModelProfile small_helper_model() {
  return explicit_profile("helper", 50'000,
                          {{0, 0.00, 0.05, 0}, {1'000'000, 0.03, 0.00, 4'000}});
}

inline splitsim::SystemState make_state(
    const std::vector<const splitsim::ModelProfile*>& models,
    const std::vector<double>& rates, const std::vector<int>& partitions,
    const std::vector<int>& cores, const splitsim::HardwareSpec& hw = default_hw(),
    splitsim::AlphaMode mode = splitsim::AlphaMode::full) {
  splitsim::SystemState s;
  s.hw = hw;
  s.alpha_mode = mode;
  for (std::size_t i = 0; i < models.size(); ++i)
    s.tenants.push_back({models[i], rates[i]});
  s.partitions = partitions;
  s.cores = cores;
  return s;
}

struct RandomInstance {
  std::vector<splitsim::ModelProfile> profiles;
  std::vector<double> rates;
  splitsim::HardwareSpec hw;

  std::vector<const splitsim::ModelProfile*> model_ptrs() const {
    std::vector<const splitsim::ModelProfile*> out;
    for (const auto& m : profiles) out.push_back(&m);
    return out;
  }
};

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Small random optimization instances for greedy-vs-exhaustive comparisons.
inline RandomInstance random_instance(std::uint64_t seed, int max_models = 3,
                                      int max_points = 6) {
  std::mt19937_64 rng(seed);
  RandomInstance inst;
  inst.hw = default_hw();
  const int n = 1 + static_cast<int>(rng() % max_models);
  for (int i = 0; i < n; ++i) {
    splitsim::SynthSpec spec;
    spec.name = "m" + std::to_string(i);
    spec.num_points = 2 + static_cast<int>(rng() % (max_points - 1));
    spec.total_bytes = 1'000'000 + static_cast<std::int64_t>(rng() % 29'000'000);
    spec.total_tpu_s = 0.01 + 0.09 * uniform01(rng);
    spec.total_cpu_s = spec.total_tpu_s * (1.5 + 4.5 * uniform01(rng));
    spec.tpu_speedup_decay = 0.5 + 0.4 * uniform01(rng);
    spec.input_bytes = 150'528;
    inst.profiles.push_back(splitsim::synth_profile(spec, inst.hw));
    inst.rates.push_back(0.5 + 4.5 * uniform01(rng));
  }
  return inst;
}

}  // namespace fixtures
