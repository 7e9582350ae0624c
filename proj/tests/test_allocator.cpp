#include "doctest.h"

#include <cmath>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "splitsim/allocator.hpp"
#include "splitsim/scenarios.hpp"

using namespace splitsim;
using fixtures::explicit_profile;

namespace {

std::vector<const ModelProfile*> ptrs(const std::vector<ModelProfile>& v) {
  std::vector<const ModelProfile*> out;
  for (const auto& m : v) out.push_back(&m);
  return out;
}

// Suffix models with unit suffix time so rate == CPU load.
std::vector<ModelProfile> load_models(int n) {
  std::vector<ModelProfile> out;
  for (int i = 0; i < n; ++i)
    out.push_back(explicit_profile("m" + std::to_string(i), 0,
                                   {{0, 0.0, 1.0, 0}, {1'000'000, 0.01, 0.0, 0}}));
  return out;
}

}  // namespace

TEST_CASE("prop_alloc proportional rounding") {
  const auto models = load_models(2);
  SUBCASE("largest remainder: loads (0.4, 0.2) over 4 cores give (3, 1)") {
    const std::vector<double> rates = {0.4, 0.2};
    const std::vector<int> partitions = {0, 0};
    const auto k = prop_alloc(ptrs(models), rates, partitions, 4);
    REQUIRE(k.has_value());
    CHECK(*k == std::vector<int>{3, 1});
  }
  SUBCASE("full-accelerator model gets nothing, the other everything") {
    const std::vector<double> rates = {2.0, 1.0};
    const std::vector<int> partitions = {1, 0};
    const auto k = prop_alloc(ptrs(models), rates, partitions, 4);
    REQUIRE(k.has_value());
    CHECK(*k == std::vector<int>{0, 4});
  }
}

TEST_CASE("prop_alloc saturates at one core each") {
  const auto models = load_models(4);
  const std::vector<int> partitions = {0, 0, 0, 0};
  for (std::vector<double> rates :
       {std::vector<double>{1, 1, 1, 1}, std::vector<double>{10, 1, 1, 1},
        std::vector<double>{0, 0, 0, 0}}) {
    const auto k = prop_alloc(ptrs(models), rates, partitions, 4);
    REQUIRE(k.has_value());
    CHECK(*k == std::vector<int>{1, 1, 1, 1});
  }
}

TEST_CASE("prop_alloc reports infeasibility when suffixes outnumber cores") {
  const auto models = load_models(5);
  const std::vector<double> rates = {1, 1, 1, 1, 1};
  const std::vector<int> partitions = {0, 0, 0, 0, 0};
  CHECK_FALSE(prop_alloc(ptrs(models), rates, partitions, 4).has_value());
}

TEST_CASE("prop_alloc output is work-conserving and satisfies the constraints") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = fixtures::random_instance(rng(), 4, 6);
    std::vector<int> partitions;
    for (const auto& m : inst.profiles)
      partitions.push_back(static_cast<int>(rng() % (m.max_partition() + 1)));
    const auto k = prop_alloc(inst.model_ptrs(), inst.rates, partitions, inst.hw.max_cores);
    int suffixes = 0;
    for (std::size_t i = 0; i < partitions.size(); ++i)
      suffixes += partitions[i] < inst.profiles[i].max_partition();
    if (suffixes > inst.hw.max_cores) {
      CHECK_FALSE(k.has_value());
      continue;
    }
    REQUIRE(k.has_value());
    int total = 0;
    for (std::size_t i = 0; i < k->size(); ++i) {
      total += (*k)[i];
      CHECK((*k)[i] >= 0);
      CHECK((*k)[i] <= inst.hw.max_cores);
      if (partitions[i] < inst.profiles[i].max_partition())
        CHECK((*k)[i] >= 1);
      else
        CHECK((*k)[i] == 0);
    }
    CHECK(total <= inst.hw.max_cores);
    if (suffixes > 0) CHECK(total == inst.hw.max_cores);
  }
}

TEST_CASE("greedy converges to full accelerator for a dominant fitting model") {
  const HardwareSpec hw = fixtures::default_hw();
  const ModelProfile m = synth_profile({"fit", 5, 4'000'000, 0.01, 0.08, 0.7, 150528}, hw);
  const std::vector<const ModelProfile*> models = {&m};
  const std::vector<double> rates = {2.0};
  const auto greedy = greedy_optimize(models, rates, hw);
  CHECK(greedy.feasible);
  CHECK(greedy.partitions == std::vector<int>{5});
  const auto brute = brute_force_optimize(models, rates, hw);
  CHECK(greedy.objective == doctest::Approx(brute.objective).epsilon(1e-12));
}

TEST_CASE("greedy matches the exhaustive optimum in the near-idle limit") {
  const HardwareSpec hw = fixtures::default_hw();
  const ModelProfile m =
      synth_profile({"tail", 6, 20'000'000, 0.03, 0.05, 0.6, 150528}, hw);
  const std::vector<const ModelProfile*> models = {&m};
  const std::vector<double> rates = {1e-4};
  const auto greedy = greedy_optimize(models, rates, hw);
  const auto brute = brute_force_optimize(models, rates, hw);
  CHECK(greedy.objective == doctest::Approx(brute.objective).epsilon(1e-9));
}

TEST_CASE("greedy escapes the single-step trap through the two-step move") {
  const HardwareSpec hw = fixtures::default_hw();
  const ModelProfile trap = fixtures::lookahead_trap_model();
  const ModelProfile helper = fixtures::small_helper_model();
  const std::vector<const ModelProfile*> models = {&trap, &helper};
  const std::vector<double> rates = {1.0, 0.5};

  const auto result = greedy_optimize(models, rates, hw);
  REQUIRE(result.feasible);
  REQUIRE(!result.trace.empty());
  CHECK(result.trace[0].model == 0);
  CHECK(result.trace[0].h == 2);

  const auto brute = brute_force_optimize(models, rates, hw);
  CHECK(result.objective == doctest::Approx(brute.objective).epsilon(1e-12));
}

TEST_CASE("greedy trace is strictly decreasing and iteration-bounded") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = fixtures::random_instance(rng());
    const auto result = greedy_optimize(inst.model_ptrs(), inst.rates, inst.hw);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& step : result.trace) {
      CHECK(step.objective < prev);
      prev = step.objective;
    }
    int budget = 0;
    for (const auto& m : inst.profiles) budget += m.max_partition();
    CHECK(result.iterations <= budget);
    CHECK(static_cast<int>(result.trace.size()) == result.iterations);
    // never worse than the all-CPU start it climbed from
    const std::vector<int> all_cpu(inst.profiles.size(), 0);
    const auto k0 =
        prop_alloc(inst.model_ptrs(), inst.rates, all_cpu, inst.hw.max_cores);
    if (k0) {
      const auto start = evaluate_candidate(inst.model_ptrs(), inst.rates, inst.hw,
                                            all_cpu, *k0, AlphaMode::full);
      CHECK(result.objective <= start.objective + 1e-12);
    }
    if (result.feasible) {
      // final objective equals a fresh evaluation of the final configuration
      const auto check = evaluate_candidate(inst.model_ptrs(), inst.rates, inst.hw,
                                            result.partitions, result.cores,
                                            AlphaMode::full);
      CHECK(result.objective == doctest::Approx(check.objective).epsilon(1e-12));
    }
  }
}

TEST_CASE("exhaustive search dominates greedy and breaks ties lexicographically") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 40; ++trial) {
    const auto inst = fixtures::random_instance(rng(), 2, 6);
    const auto greedy = greedy_optimize(inst.model_ptrs(), inst.rates, inst.hw);
    const auto brute = brute_force_optimize(inst.model_ptrs(), inst.rates, inst.hw);
    if (brute.feasible) CHECK(brute.objective <= greedy.objective + 1e-12);
  }

  SUBCASE("single model, two points: exact argmin") {
    const ModelProfile m = explicit_profile(
        "m", 0, {{0, 0.0, 0.2, 0}, {1'000'000, 0.02, 0.1, 0}, {2'000'000, 0.05, 0.0, 0}});
    HardwareSpec hw{8'000'000, 320e6, 1};
    const std::vector<const ModelProfile*> models = {&m};
    const std::vector<double> rates = {1.0};
    const auto brute = brute_force_optimize(models, rates, hw);
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_p;
    for (int p = 0; p <= 2; ++p) {
      const std::vector<int> k = {p == 2 ? 0 : 1};
      const auto est =
          evaluate_candidate(models, rates, hw, std::vector<int>{p}, k, AlphaMode::full);
      if (est.objective < best) {
        best = est.objective;
        best_p = {p};
      }
    }
    CHECK(brute.partitions == best_p);
    CHECK(brute.objective == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("brute force guard trips on oversized spaces") {
  const HardwareSpec hw{8'000'000, 320e6, 16};
  std::vector<ModelProfile> models;
  for (int i = 0; i < 8; ++i)
    models.push_back(synth_profile(
        {"g" + std::to_string(i), 11, 5'000'000, 0.01, 0.05, 0.7, 1000}, hw));
  const std::vector<double> rates(8, 1.0);
  CHECK_THROWS_AS(brute_force_optimize(ptrs(models), rates, hw), GuardError);
}

TEST_CASE("feasible candidates stay feasible when all rates scale down") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = fixtures::random_instance(rng(), 2, 4);
    const double c = 0.2 + 0.8 * fixtures::uniform01(rng);
    std::vector<double> scaled = inst.rates;
    for (auto& r : scaled) r *= c;
    // enumerate every structurally valid candidate
    const auto models = inst.model_ptrs();
    std::vector<int> p(models.size(), 0);
    while (true) {
      std::vector<int> k(models.size(), 0);
      int budget = inst.hw.max_cores;
      bool ok = true;
      for (std::size_t i = 0; i < models.size(); ++i) {
        if (p[i] < models[i]->max_partition()) {
          if (budget == 0) ok = false;
          else {
            k[i] = 1;
            --budget;
          }
        }
      }
      if (ok) {
        const auto full = evaluate_candidate(models, inst.rates, inst.hw, p, k,
                                             AlphaMode::full);
        const auto down =
            evaluate_candidate(models, scaled, inst.hw, p, k, AlphaMode::full);
        if (full.feasible) CHECK(down.feasible);
      }
      std::size_t pos = models.size();
      while (pos > 0) {
        --pos;
        if (p[pos] < models[pos]->max_partition()) {
          ++p[pos];
          std::fill(p.begin() + pos + 1, p.end(), 0);
          break;
        }
        if (pos == 0) {
          pos = models.size();
          break;
        }
      }
      if (pos == models.size()) break;
    }
  }
}

TEST_CASE("threshold baseline scans from the deepest segment") {
  SUBCASE("parity everywhere offloads the whole model") {
    const ModelProfile m = explicit_profile("par", 0,
                                            {{0, 0.00, 0.30, 0},
                                             {1'000'000, 0.10, 0.20, 0},
                                             {2'000'000, 0.20, 0.10, 0},
                                             {3'000'000, 0.30, 0.00, 0}});
    CHECK(threshold_baseline(m) == 0);
  }
  SUBCASE("no segment within the margin keeps the full accelerator") {
    const ModelProfile m = explicit_profile("fast", 0,
                                            {{0, 0.00, 0.90, 0},
                                             {1'000'000, 0.10, 0.60, 0},
                                             {2'000'000, 0.20, 0.30, 0},
                                             {3'000'000, 0.30, 0.00, 0}});
    CHECK(threshold_baseline(m) == 3);
  }
  SUBCASE("decay profile with parity in the last three segments offloads three") {
    // deltas: tpu = 0.10 each; cpu = 0.30, 0.30, 0.105, 0.105, 0.105
    const ModelProfile m = explicit_profile("decay", 0,
                                            {{0, 0.00, 0.915, 0},
                                             {1'000'000, 0.10, 0.615, 0},
                                             {2'000'000, 0.20, 0.315, 0},
                                             {3'000'000, 0.30, 0.210, 0},
                                             {4'000'000, 0.40, 0.105, 0},
                                             {5'000'000, 0.50, 0.000, 0}});
    CHECK(threshold_baseline(m, 10.0) == 2);
  }
}

TEST_CASE("compiler baseline puts everything on the accelerator") {
  const ProfileSet set = bundled_profile_set();
  std::vector<const ModelProfile*> models;
  std::vector<double> rates;
  for (const auto& m : set.models) {
    models.push_back(&m);
    rates.push_back(0.2);
  }
  const auto r = compiler_baseline(models, rates, set.hardware);
  for (std::size_t i = 0; i < models.size(); ++i) {
    CHECK(r.partitions[i] == models[i]->max_partition());
    CHECK(r.cores[i] == 0);
  }

  SUBCASE("over-capacity pairs cost more than fitting pairs at equal load") {
    const std::vector<const ModelProfile*> fitting = {&set.at("mobilenetv2"),
                                                      &set.at("squeezenet")};
    const std::vector<const ModelProfile*> oversized = {&set.at("efficientnet"),
                                                        &set.at("gpunet")};
    const std::vector<double> rr = {2.0, 2.0};
    const auto fit = compiler_baseline(fitting, rr, set.hardware);
    const auto over = compiler_baseline(oversized, rr, set.hardware);
    CHECK(over.objective > fit.objective);
  }
  SUBCASE("fitting single model: compiler equals greedy when greedy picks full") {
    const std::vector<const ModelProfile*> one = {&set.at("mobilenetv2")};
    const std::vector<double> rr = {2.0};
    const auto greedy = greedy_optimize(one, rr, set.hardware);
    const auto comp = compiler_baseline(one, rr, set.hardware);
    CHECK(greedy.partitions == comp.partitions);
    CHECK(greedy.objective == doctest::Approx(comp.objective).epsilon(1e-12));
  }
}

TEST_CASE("greedy start-state repair with more models than cores") {
  const HardwareSpec hw{8'000'000, 320e6, 2};
  std::vector<ModelProfile> models;
  for (int i = 0; i < 4; ++i)
    models.push_back(synth_profile(
        {"r" + std::to_string(i), 3, 1'000'000, 0.004, 0.02, 0.7, 1000}, hw));
  const std::vector<double> rates = {1.0, 1.0, 1.0, 1.0};
  const auto result = greedy_optimize(ptrs(models), rates, hw);
  CHECK(result.feasible);
  int suffixes = 0, cores = 0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    suffixes += result.partitions[i] < models[i].max_partition();
    cores += result.cores[i];
  }
  CHECK(suffixes <= 2);
  CHECK(cores <= 2);
}

TEST_CASE("greedy escapes a CPU-overloaded start") {
  // Full-CPU execution cannot carry the load; the optimizer must still find
  // the feasible accelerator-heavy region.
  const HardwareSpec hw = fixtures::default_hw();
  const ModelProfile m = synth_profile({"heavy", 6, 20'000'000, 0.05, 1.5, 0.6, 150528}, hw);
  const std::vector<const ModelProfile*> models = {&m};
  const std::vector<double> rates = {4.0};  // 4 * 1.5 s = 6 core-loads > 4
  const auto result = greedy_optimize(models, rates, hw);
  CHECK(result.feasible);
  const auto brute = brute_force_optimize(models, rates, hw);
  CHECK(brute.objective <= result.objective + 1e-12);
}
