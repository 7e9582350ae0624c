#include "doctest.h"

#include <cmath>

#include "fixtures.hpp"
#include "splitsim/simulator.hpp"

using namespace splitsim;
using fixtures::explicit_profile;
using fixtures::make_state;

namespace {

// Zero-transfer model: pure deterministic service on the accelerator.
const ModelProfile kPlain = explicit_profile(
    "plain", 0, {{0, 0.0, 0.3, 0}, {1'000'000, 0.1, 0.0, 0}});

SimConfig basic_config(const SystemState& s, std::int64_t total, std::uint64_t seed,
                       std::int64_t warmup = -1) {
  SimConfig cfg;
  cfg.state = s;
  cfg.seed = seed;
  cfg.total_requests = total;
  cfg.warmup_requests = warmup;
  return cfg;
}

}  // namespace

TEST_CASE("run_sim rejects a zero-rate workload and bad configurations") {
  const auto idle = make_state({&kPlain}, {0.0}, {1}, {0});
  CHECK_THROWS_WITH_AS(run_sim(basic_config(idle, 1000, 1)),
                       "run_sim: workload has zero total rate", ValidationError);

  const auto no_core = make_state({&kPlain}, {1.0}, {0}, {0});
  CHECK_THROWS_AS(run_sim(basic_config(no_core, 1000, 1)), ValidationError);

  const auto extra_core = make_state({&kPlain}, {1.0}, {1}, {1});
  CHECK_THROWS_AS(run_sim(basic_config(extra_core, 1000, 1)), ValidationError);
}

TEST_CASE("single-tenant deterministic service matches the M/D/1 wait") {
  const auto s = make_state({&kPlain}, {5.0}, {1}, {0});
  const SimReport rep = run_sim(basic_config(s, 200'000, 11));
  CHECK(rep.models[0].mean_tpu_wait_s == doctest::Approx(0.05).epsilon(0.02));
  CHECK(rep.models[0].mean_e2e_s == doctest::Approx(0.15).epsilon(0.02));
  CHECK(rep.models[0].miss_fraction == 0.0);
  CHECK(rep.tpu_busy_fraction == doctest::Approx(0.5).epsilon(0.02));
  CHECK_FALSE(rep.truncated);
  CHECK(rep.models[0].p50_e2e_s <= rep.models[0].p95_e2e_s);
  CHECK(rep.models[0].p95_e2e_s <= rep.models[0].p99_e2e_s);
  CHECK(rep.models[0].p50_e2e_s >= 0.1);  // never below the service time
}

TEST_CASE("empirical miss fraction converges to the rate-share bound") {
  const HardwareSpec hw{8'000'000, 320e6, 4};
  const ModelProfile eff = explicit_profile(
      "eff", 0, {{0, 0.0, 0.2, 0}, {6'700'000, 0.03, 0.0, 0}});
  const ModelProfile gpu = explicit_profile(
      "gpu", 0, {{0, 0.0, 0.2, 0}, {12'200'000, 0.038, 0.0, 0}});

  SUBCASE("50:50") {
    const auto s = make_state({&eff, &gpu}, {3.0, 3.0}, {1, 1}, {0, 0}, hw);
    const SimReport rep = run_sim(basic_config(s, 100'000, 5));
    CHECK(std::abs(rep.models[0].miss_fraction - 0.5) < 0.02);
    CHECK(std::abs(rep.models[1].miss_fraction - 0.5) < 0.02);
  }
  SUBCASE("90:10") {
    const auto s = make_state({&eff, &gpu}, {9.0, 1.0}, {1, 1}, {0, 0}, hw);
    const SimReport rep = run_sim(basic_config(s, 100'000, 5));
    CHECK(std::abs(rep.models[0].miss_fraction - 0.1) < 0.02);
    CHECK(std::abs(rep.models[1].miss_fraction - 0.9) < 0.02);
  }
}

TEST_CASE("identical configurations produce byte-identical reports") {
  const auto s = make_state({&kPlain}, {5.0}, {1}, {0});
  const SimReport a = run_sim(basic_config(s, 20'000, 77));
  const SimReport b = run_sim(basic_config(s, 20'000, 77));
  CHECK(a.to_json() == b.to_json());
  CHECK(a.to_csv() == b.to_csv());
  const SimReport c = run_sim(basic_config(s, 20'000, 78));
  CHECK(a.to_json() != c.to_json());
}

TEST_CASE("conservation: completed counts equal admitted minus warmup") {
  const HardwareSpec hw = fixtures::default_hw();
  const ModelProfile two_stage = explicit_profile(
      "two", 10'000, {{0, 0.0, 0.05, 0}, {2'000'000, 0.01, 0.02, 5'000},
                      {4'000'000, 0.03, 0.0, 1'000}});
  const auto s = make_state({&kPlain, &two_stage}, {3.0, 2.0}, {1, 1}, {0, 2}, hw);
  const SimReport rep = run_sim(basic_config(s, 50'000, 9, 2'000));
  CHECK(rep.total_completed == 48'000);
  std::int64_t by_model = 0;
  for (const auto& m : rep.models) by_model += m.completed;
  CHECK(by_model == 48'000);
  CHECK_FALSE(rep.truncated);
}

TEST_CASE("Little's law holds per stage") {
  const HardwareSpec hw = fixtures::default_hw();
  const ModelProfile split = explicit_profile(
      "split", 0, {{0, 0.0, 0.12, 0}, {2'000'000, 0.06, 0.04, 0},
                   {4'000'000, 0.09, 0.0, 0}});
  const auto s = make_state({&split}, {6.0}, {1}, {2}, hw);
  const SimReport rep = run_sim(basic_config(s, 100'000, 41, 0));

  const double lam_tpu = rep.models[0].tpu_requests / rep.elapsed_s;
  CHECK(rep.tpu_mean_in_stage ==
        doctest::Approx(lam_tpu * rep.tpu_mean_sojourn_s).epsilon(0.05));
  const double lam_cpu = rep.models[0].completed / rep.elapsed_s;
  CHECK(rep.models[0].cpu_mean_in_stage ==
        doctest::Approx(lam_cpu * rep.models[0].cpu_mean_sojourn_s).epsilon(0.05));
}

TEST_CASE("weight cache: evict-on-switch semantics") {
  const HardwareSpec hw{8'000'000, 320e6, 4};
  WeightCache cache(CacheMode::evict_on_switch, hw);
  SUBCASE("fitting footprint never charges") {
    CHECK(cache.lookup_and_charge(0, 4'100'000, false) == 0.0);
    CHECK(cache.lookup_and_charge(1, 1'400'000, false) == 0.0);
  }
  SUBCASE("back-to-back requests of one model charge only once") {
    CHECK(cache.lookup_and_charge(0, 6'400'000, true) ==
          doctest::Approx(0.02).epsilon(1e-12));
    CHECK(cache.lookup_and_charge(0, 6'400'000, true) == 0.0);
    CHECK(cache.lookup_and_charge(1, 3'200'000, true) ==
          doctest::Approx(0.01).epsilon(1e-12));
    CHECK(cache.lookup_and_charge(0, 6'400'000, true) ==
          doctest::Approx(0.02).epsilon(1e-12));
  }
}

TEST_CASE("weight cache: byte-capacity LRU charges only missing bytes") {
  const HardwareSpec hw{8'000'000, 320e6, 4};
  WeightCache cache(CacheMode::lru_bytes, hw);
  const std::int64_t eff = 6'700'000, gpu = 12'200'000;
  // cold: full loads
  CHECK(cache.lookup_and_charge(0, eff, true) ==
        doctest::Approx(eff / 320e6).epsilon(1e-12));
  CHECK(cache.lookup_and_charge(1, gpu, true) ==
        doctest::Approx(gpu / 320e6).epsilon(1e-12));
  // eff was evicted to make room, gpu keeps 8 MB resident
  CHECK(cache.lookup_and_charge(0, eff, true) ==
        doctest::Approx(eff / 320e6).epsilon(1e-12));
  // gpu retains 8 MB - 6.7 MB = 1.3 MB; the charge is strictly below a full
  // reload once partially resident
  const double charge = cache.lookup_and_charge(1, gpu, true);
  CHECK(charge == doctest::Approx((gpu - 1'300'000) / 320e6).epsilon(1e-12));
  CHECK(charge < gpu / 320e6);

  SUBCASE("preloaded extents satisfy fitting footprints outright") {
    WeightCache warm(CacheMode::lru_bytes, hw);
    warm.preload({{0, 4'100'000}, {1, 1'400'000}});
    CHECK(warm.lookup_and_charge(0, 4'100'000, false) == 0.0);
    CHECK(warm.lookup_and_charge(1, 1'400'000, false) == 0.0);
  }
}

TEST_CASE("cache modes are indistinguishable when the footprint fits") {
  const HardwareSpec hw{8'000'000, 320e6, 4};
  const ModelProfile a = explicit_profile(
      "a", 10'000, {{0, 0.0, 0.05, 0}, {4'100'000, 0.012, 0.0, 1'000}});
  const ModelProfile b = explicit_profile(
      "b", 10'000, {{0, 0.0, 0.02, 0}, {1'400'000, 0.004, 0.0, 1'000}});
  const auto s = make_state({&a, &b}, {8.0, 25.0}, {1, 1}, {0, 0}, hw);

  double mean[2] = {0.0, 0.0};
  int idx = 0;
  for (CacheMode mode : {CacheMode::evict_on_switch, CacheMode::lru_bytes}) {
    for (std::uint64_t seed : {101u, 202u}) {
      SimConfig cfg = basic_config(s, 50'000, seed);
      cfg.cache_mode = mode;
      const SimReport rep = run_sim(cfg);
      CHECK(rep.models[0].miss_fraction == 0.0);
      CHECK(rep.models[1].miss_fraction == 0.0);
      mean[idx] += rep.mean_latency_s / 2.0;
    }
    ++idx;
  }
  CHECK(mean[0] == doctest::Approx(mean[1]).epsilon(0.01));
}

TEST_CASE("horizon truncation is flagged and partial") {
  const auto s = make_state({&kPlain}, {10.0}, {1}, {0});
  SimConfig cfg = basic_config(s, 1'000'000, 3, 0);
  cfg.horizon_s = 5.0;
  const SimReport rep = run_sim(cfg);
  CHECK(rep.truncated);
  CHECK(rep.total_completed < 1'000'000);
  CHECK(rep.total_completed > 0);
  CHECK(rep.elapsed_s == doctest::Approx(5.0));
}

TEST_CASE("overload runs are allowed and flagged saturated") {
  const auto s = make_state({&kPlain}, {15.0}, {1}, {0});  // rho = 1.5
  SimConfig cfg = basic_config(s, 20'000, 13, 0);
  const SimReport rep = run_sim(cfg);
  CHECK(rep.saturated);
  CHECK(rep.total_completed == 20'000);  // drains after arrivals stop
}

TEST_CASE("full-CPU tenants never touch the accelerator") {
  const HardwareSpec hw = fixtures::default_hw();
  const ModelProfile cpu_only = explicit_profile(
      "cpuonly", 10'000, {{0, 0.0, 0.05, 0}, {2'000'000, 0.01, 0.0, 100}});
  const auto s = make_state({&cpu_only, &kPlain}, {4.0, 3.0}, {0, 1}, {2, 0}, hw);
  const SimReport rep = run_sim(basic_config(s, 30'000, 21));
  CHECK(rep.models[0].tpu_requests == 0);
  CHECK(rep.models[0].miss_fraction == 0.0);
  CHECK(rep.models[0].mean_tpu_wait_s == 0.0);
  CHECK(rep.models[0].mean_cpu_wait_s >= 0.0);
  CHECK(rep.models[1].tpu_requests == rep.models[1].completed);
}

TEST_CASE("per-model streams are independent of co-tenants") {
  // Adding a second tenant must not perturb the first tenant's arrivals:
  // with an idle co-tenant the first model's completion count and latency
  // stay identical.
  const auto alone = make_state({&kPlain}, {5.0}, {1}, {0});
  SimConfig cfg_alone = basic_config(alone, 10'000, 31, 0);

  const ModelProfile ghost = explicit_profile(
      "ghost", 0, {{0, 0.0, 0.01, 0}, {1'000, 0.001, 0.0, 0}});
  const auto pair = make_state({&kPlain, &ghost}, {5.0, 0.0}, {1, 1}, {0, 0});
  SimConfig cfg_pair = basic_config(pair, 10'000, 31, 0);

  const SimReport a = run_sim(cfg_alone);
  const SimReport b = run_sim(cfg_pair);
  CHECK(a.models[0].completed == b.models[0].completed);
  CHECK(a.models[0].mean_e2e_s == doctest::Approx(b.models[0].mean_e2e_s).epsilon(1e-12));
}
