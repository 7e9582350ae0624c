#include "splitsim/validation.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "splitsim/allocator.hpp"

namespace splitsim {

using nlohmann::json;

std::vector<double> solve_rates_for_rho(const SystemState& state, double rho_target) {
  if (!(rho_target > 0.0) || rho_target >= 1.0)
    throw ValidationError("solve_rates_for_rho: rho must lie in (0, 1)");
  const std::size_t n = state.tenants.size();
  if (n == 0) throw ValidationError("solve_rates_for_rho: empty state");
  for (std::size_t i = 0; i < n; ++i)
    if (state.partitions[i] <= 0)
      throw ValidationError("solve_rates_for_rho: every model needs an accelerator prefix");

  SystemState work = state;
  std::vector<double> unit(n, 1.0);
  // The miss probabilities depend only on rate ratios, so iterate the
  // equal-load fixed point on a unit vector and scale afterwards.
  for (int iter = 0; iter < 100; ++iter) {
    for (std::size_t i = 0; i < n; ++i) work.tenants[i].rate_rps = unit[i];
    double max_u = 0.0;
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = (n == 1) ? 0.0 : weight_miss_prob(work, static_cast<int>(i));
      const double eff = a * t_load(*work.tenants[i].profile, work.partitions[i], work.hw) +
                         work.tenants[i].profile->tpu_prefix_s(work.partitions[i]);
      next[i] = 1.0 / eff;
      max_u = std::max(max_u, next[i]);
    }
    for (std::size_t i = 0; i < n; ++i) next[i] /= max_u;
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) delta += std::abs(next[i] - unit[i]);
    unit = std::move(next);
    if (delta < 1e-12) break;
  }

  for (std::size_t i = 0; i < n; ++i) work.tenants[i].rate_rps = unit[i];
  double load = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = (n == 1) ? 0.0 : weight_miss_prob(work, static_cast<int>(i));
    load += unit[i] *
            (a * t_load(*work.tenants[i].profile, work.partitions[i], work.hw) +
             work.tenants[i].profile->tpu_prefix_s(work.partitions[i]));
  }
  const double scale = rho_target / load;
  std::vector<double> rates(n);
  for (std::size_t i = 0; i < n; ++i) rates[i] = unit[i] * scale;
  return rates;
}

std::vector<ValidationCell> default_validation_cells(const ProfileSet& set,
                                                     const ValidationOptions& opt) {
  std::vector<ValidationCell> cells;
  if (opt.single_tenant) {
    for (const auto& m : set.models) {
      const int P = m.max_partition();
      std::vector<int> candidates = {P,
                                     std::max(1, static_cast<int>(std::llround(0.7 * P)))};
      if (candidates[1] == candidates[0]) candidates.pop_back();
      for (int p : candidates)
        for (double rho : opt.rho_targets)
          cells.push_back({m.name, {m.name}, {p}, {}, rho});
    }
  }
  if (opt.multi_tenant) {
    struct Mix {
      std::vector<std::string> names;
      std::vector<int> partitions;  // -1 = full accelerator
    };
    const std::vector<Mix> mixes = {
        {{"mobilenetv2", "squeezenet"}, {-1, -1}},
        {{"efficientnet", "gpunet"}, {-1, -1}},
        {{"mnasnet", "inceptionv4"}, {-1, 8}},
    };
    for (const auto& mix : mixes) {
      bool present = true;
      for (const auto& name : mix.names) present = present && set.index_of(name) >= 0;
      if (!present) continue;
      ValidationCell cell;
      cell.models = mix.names;
      for (std::size_t i = 0; i < mix.names.size(); ++i) {
        const ModelProfile& m = set.at(mix.names[i]);
        cell.partitions.push_back(mix.partitions[i] < 0 ? m.max_partition()
                                                        : mix.partitions[i]);
        cell.label += (i ? "+" : "") + mix.names[i];
      }
      for (double rho : opt.rho_targets) {
        cell.rho = rho;
        cells.push_back(cell);
      }
    }
  }
  return cells;
}

ValidationReport run_validation(const ProfileSet& set, const ValidationOptions& opt) {
  ValidationReport rep;
  rep.requests_per_cell = opt.requests_per_cell;
  rep.seed = opt.seed;
  const auto cells = default_validation_cells(set, opt);

  double ape_single = 0.0, ape_multi = 0.0;
  std::int64_t n_single = 0, n_multi = 0;

  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& cell = cells[c];
    std::vector<const ModelProfile*> models;
    for (const auto& name : cell.models) models.push_back(&set.at(name));

    SystemState state;
    state.hw = set.hardware;
    state.partitions = cell.partitions;
    state.cores.assign(models.size(), 0);
    for (const auto* m : models) state.tenants.push_back({m, 0.0});

    const std::vector<double> rates = solve_rates_for_rho(state, cell.rho);
    std::vector<double> rvec = rates;
    auto cores = prop_alloc(models, rvec, cell.partitions, set.hardware.max_cores);
    if (!cores) throw ValidationError("validation cell infeasible: " + cell.label);
    state.cores = *cores;
    for (std::size_t i = 0; i < models.size(); ++i) state.tenants[i].rate_rps = rates[i];

    const LatencyEstimate predicted = objective(state);

    SimConfig cfg;
    cfg.state = state;
    cfg.cache_mode = opt.cache_mode;
    cfg.seed = opt.seed + c;
    cfg.total_requests = opt.requests_per_cell;
    const SimReport sim = run_sim(cfg);

    const bool multi = models.size() > 1;
    for (std::size_t i = 0; i < models.size(); ++i) {
      ValidationRow row;
      row.mode = multi ? "multi" : "single";
      row.label = cell.label;
      row.model = models[i]->name;
      row.rho = cell.rho;
      row.rate_rps = rates[i];
      row.partition = cell.partitions[i];
      row.cores = state.cores[i];
      row.predicted_s = predicted.e2e_s[i];
      row.simulated_s = sim.models[i].mean_e2e_s;
      row.ape_pct = row.simulated_s > 0.0
                        ? std::abs(row.predicted_s - row.simulated_s) / row.simulated_s *
                              100.0
                        : 0.0;
      (multi ? ape_multi : ape_single) += row.ape_pct;
      ++(multi ? n_multi : n_single);
      rep.rows.push_back(std::move(row));
    }
  }
  rep.mape_single_pct = n_single > 0 ? ape_single / n_single : 0.0;
  rep.mape_multi_pct = n_multi > 0 ? ape_multi / n_multi : 0.0;
  return rep;
}

std::string ValidationReport::to_csv() const {
  std::string out =
      "mode,label,model,rho,rate_rps,partition,cores,predicted_s,simulated_s,ape_pct\n";
  char line[512];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%s,%s,%s,%.10g,%.10g,%d,%d,%.10g,%.10g,%.10g\n",
                  r.mode.c_str(), r.label.c_str(), r.model.c_str(), r.rho, r.rate_rps,
                  r.partition, r.cores, r.predicted_s, r.simulated_s, r.ape_pct);
    out += line;
  }
  std::snprintf(line, sizeof(line), "summary,single,,,,,,,,%.10g\n", mape_single_pct);
  out += line;
  std::snprintf(line, sizeof(line), "summary,multi,,,,,,,,%.10g\n", mape_multi_pct);
  out += line;
  return out;
}

std::string ValidationReport::to_json(int indent) const {
  json jr = json::array();
  for (const auto& r : rows) {
    jr.push_back({{"mode", r.mode},
                  {"label", r.label},
                  {"model", r.model},
                  {"rho", r.rho},
                  {"rate_rps", r.rate_rps},
                  {"partition", r.partition},
                  {"cores", r.cores},
                  {"predicted_s", r.predicted_s},
                  {"simulated_s", r.simulated_s},
                  {"ape_pct", r.ape_pct}});
  }
  json j{{"rows", jr},
         {"mape_single_pct", mape_single_pct},
         {"mape_multi_pct", mape_multi_pct},
         {"requests_per_cell", requests_per_cell},
         {"seed", seed}};
  return j.dump(indent) + "\n";
}

}  // namespace splitsim
