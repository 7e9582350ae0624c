#include "splitsim/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace splitsim {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

[[noreturn]] void fail(const std::string& msg) { throw ValidationError(msg); }

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    fail("parse failure in " + path + ": " + e.what());
  }
  return j;
}

json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("parse failure: ") + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail("cannot write file: " + path);
  out << text;
}

}  // namespace

void validate(const HardwareSpec& hw) {
  if (hw.sram_capacity_bytes <= 0) fail("hardware.sram_capacity_bytes must be > 0");
  if (!(hw.bandwidth_bytes_per_s > 0.0)) fail("hardware.bandwidth_bytes_per_s must be > 0");
  if (hw.max_cores < 1) fail("hardware.max_cores must be >= 1");
}

void validate(const ModelProfile& m) {
  if (m.name.empty()) fail("model name must be non-empty");
  if (m.input_bytes < 0) fail("model " + m.name + ": input_bytes must be >= 0");
  if (m.points.size() < 2)
    fail("model " + m.name + ": needs at least one partition point besides p=0");
  const int P = m.max_partition();
  const auto& pts = m.points;
  if (pts[0].prefix_bytes != 0)
    fail("model " + m.name + ": prefix_bytes(0) must be 0");
  if (pts[0].tpu_prefix_s != 0.0)
    fail("model " + m.name + ": tpu_prefix_s(0) must be 0");
  if (pts[P].cpu_suffix_s != 0.0)
    fail("model " + m.name + ": cpu_suffix_s(" + std::to_string(P) + ") must be 0");
  for (int p = 0; p <= P; ++p) {
    if (pts[p].prefix_bytes < 0)
      fail("model " + m.name + ": prefix_bytes(" + std::to_string(p) + ") must be >= 0");
    if (pts[p].tpu_prefix_s < 0.0)
      fail("model " + m.name + ": tpu_prefix_s(" + std::to_string(p) + ") must be >= 0");
    if (pts[p].cpu_suffix_s < 0.0)
      fail("model " + m.name + ": cpu_suffix_s(" + std::to_string(p) + ") must be >= 0");
    if (pts[p].intermediate_bytes < 0)
      fail("model " + m.name + ": intermediate_bytes(" + std::to_string(p) + ") must be >= 0");
    if (p == 0) continue;
    if (pts[p].prefix_bytes < pts[p - 1].prefix_bytes)
      fail("model " + m.name + ": prefix_bytes(" + std::to_string(p) +
           ") breaks monotonicity");
    if (pts[p].tpu_prefix_s < pts[p - 1].tpu_prefix_s)
      fail("model " + m.name + ": tpu_prefix_s(" + std::to_string(p) +
           ") breaks monotonicity");
    if (pts[p].cpu_suffix_s > pts[p - 1].cpu_suffix_s)
      fail("model " + m.name + ": cpu_suffix_s(" + std::to_string(p) +
           ") breaks monotonicity");
  }
}

int ProfileSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < models.size(); ++i)
    if (models[i].name == name) return static_cast<int>(i);
  return -1;
}

const ModelProfile& ProfileSet::at(const std::string& name) const {
  int i = index_of(name);
  if (i < 0) fail("unknown model: " + name);
  return models[i];
}

void validate(const ProfileSet& set) {
  validate(set.hardware);
  for (const auto& m : set.models) validate(m);
  for (std::size_t i = 0; i < set.models.size(); ++i)
    for (std::size_t j = i + 1; j < set.models.size(); ++j)
      if (set.models[i].name == set.models[j].name)
        fail("duplicate model name: " + set.models[i].name);
}

namespace {

ProfileSet profiles_from_json(const json& j) {
  ProfileSet set;
  if (!j.is_object()) fail("profile file: top level must be an object");
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer())
    fail("profile file: missing integer schema_version");
  if (j["schema_version"].get<int>() != kSchemaVersion)
    fail("profile file: unsupported schema_version " + j["schema_version"].dump());
  if (!j.contains("hardware")) fail("profile file: missing hardware section");
  const json& h = j["hardware"];
  set.hardware.sram_capacity_bytes = h.value("sram_capacity_bytes", std::int64_t{0});
  set.hardware.bandwidth_bytes_per_s = h.value("bandwidth_bytes_per_s", 0.0);
  set.hardware.max_cores = h.value("max_cores", 0);
  if (!j.contains("models") || !j["models"].is_array())
    fail("profile file: missing models array");
  for (const json& jm : j["models"]) {
    ModelProfile m;
    m.name = jm.value("name", std::string{});
    m.input_bytes = jm.value("input_bytes", std::int64_t{0});
    if (!jm.contains("points") || !jm["points"].is_array())
      fail("model " + m.name + ": missing points array");
    const json& jp = jm["points"];
    m.points.resize(jp.size());
    std::vector<bool> seen(jp.size(), false);
    for (const json& pt : jp) {
      if (!pt.contains("p") || !pt["p"].is_number_integer())
        fail("model " + m.name + ": point without integer index p");
      int p = pt["p"].get<int>();
      if (p < 0 || p >= static_cast<int>(jp.size()) || seen[p])
        fail("model " + m.name + ": point indices must cover 0.." +
             std::to_string(jp.size() - 1) + " exactly once (bad p=" +
             std::to_string(p) + ")");
      seen[p] = true;
      m.points[p].prefix_bytes = pt.value("prefix_bytes", std::int64_t{0});
      m.points[p].tpu_prefix_s = pt.value("tpu_prefix_s", 0.0);
      m.points[p].cpu_suffix_s = pt.value("cpu_suffix_s", 0.0);
      m.points[p].intermediate_bytes = pt.value("intermediate_bytes", std::int64_t{0});
    }
    set.models.push_back(std::move(m));
  }
  validate(set);
  return set;
}

json profiles_to_json(const ProfileSet& set) {
  json jm = json::array();
  for (const auto& m : set.models) {
    json pts = json::array();
    for (int p = 0; p <= m.max_partition(); ++p) {
      pts.push_back({{"p", p},
                     {"prefix_bytes", m.points[p].prefix_bytes},
                     {"tpu_prefix_s", m.points[p].tpu_prefix_s},
                     {"cpu_suffix_s", m.points[p].cpu_suffix_s},
                     {"intermediate_bytes", m.points[p].intermediate_bytes}});
    }
    jm.push_back({{"name", m.name}, {"input_bytes", m.input_bytes}, {"points", pts}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"hardware",
               {{"sram_capacity_bytes", set.hardware.sram_capacity_bytes},
                {"bandwidth_bytes_per_s", set.hardware.bandwidth_bytes_per_s},
                {"max_cores", set.hardware.max_cores}}},
              {"models", jm}};
}

}  // namespace

ProfileSet parse_profiles(const std::string& json_text) {
  return profiles_from_json(parse_json_text(json_text));
}

ProfileSet load_profiles(const std::string& path) {
  return profiles_from_json(read_json_file(path));
}

std::string serialize_profiles(const ProfileSet& set) {
  return profiles_to_json(set).dump(2) + "\n";
}

void save_profiles(const ProfileSet& set, const std::string& path) {
  write_text_file(path, serialize_profiles(set));
}

double t_load(const ModelProfile& m, int p, const HardwareSpec& hw) {
  if (p < 0 || p > m.max_partition())
    fail("t_load: partition " + std::to_string(p) + " out of range for " + m.name);
  return static_cast<double>(m.prefix_bytes(p)) / hw.bandwidth_bytes_per_s;
}

ModelProfile synth_profile(const SynthSpec& spec, const HardwareSpec& hw) {
  validate(hw);
  if (spec.num_points < 1) fail("synth_profile: num_points must be >= 1");
  if (spec.total_bytes <= 0) fail("synth_profile: total_bytes must be > 0");
  if (!(spec.total_tpu_s > 0.0)) fail("synth_profile: total_tpu_s must be > 0");
  if (!(spec.total_cpu_s > 0.0)) fail("synth_profile: total_cpu_s must be > 0");
  if (!(spec.tpu_speedup_decay > 0.0) || spec.tpu_speedup_decay > 1.0)
    fail("synth_profile: tpu_speedup_decay must lie in (0, 1]");
  if (spec.input_bytes < 0) fail("synth_profile: input_bytes must be >= 0");

  const int P = spec.num_points;
  const double d = spec.tpu_speedup_decay;

  // Geometric segment weights: the deepest segment carries the largest share
  // of accelerator time, so the speedup over the (uniform) CPU segments
  // shrinks by a factor d per segment.
  std::vector<double> weight(P + 1, 0.0);
  double weight_sum = 0.0;
  for (int l = 1; l <= P; ++l) {
    weight[l] = std::pow(d, P - l);
    weight_sum += weight[l];
  }

  ModelProfile m;
  m.name = spec.name;
  m.input_bytes = spec.input_bytes;
  m.points.resize(P + 1);
  double tpu_cum = 0.0;
  for (int p = 0; p <= P; ++p) {
    auto& pt = m.points[p];
    pt.prefix_bytes = static_cast<std::int64_t>(
        std::llround(static_cast<double>(spec.total_bytes) * p / P));
    if (p > 0) tpu_cum += spec.total_tpu_s * weight[p] / weight_sum;
    const std::int64_t over =
        std::max<std::int64_t>(0, pt.prefix_bytes - hw.sram_capacity_bytes);
    pt.tpu_prefix_s =
        (p == 0) ? 0.0
                 : tpu_cum + static_cast<double>(over) / hw.bandwidth_bytes_per_s;
    pt.cpu_suffix_s = spec.total_cpu_s * (P - p) / P;
    if (p == 0)
      pt.intermediate_bytes = 0;
    else if (p == P)
      pt.intermediate_bytes = std::llround(0.03 * static_cast<double>(spec.input_bytes));
    else
      pt.intermediate_bytes = std::llround(
          static_cast<double>(spec.input_bytes) * (P - p) / P);
  }
  validate(m);
  return m;
}

// --- Workloads --------------------------------------------------------------

void validate(const WorkloadSpec& w) {
  for (const auto& e : w.entries) {
    if (e.model.empty()) fail("workload: model name must be non-empty");
    if (e.schedule.empty()) fail("workload " + e.model + ": schedule must be non-empty");
    for (std::size_t i = 0; i < e.schedule.size(); ++i) {
      if (e.schedule[i].rate_rps < 0.0)
        fail("workload " + e.model + ": rate_rps must be >= 0 at entry " +
             std::to_string(i));
      if (i > 0 && e.schedule[i].start_s <= e.schedule[i - 1].start_s)
        fail("workload " + e.model + ": start_s must be strictly increasing at entry " +
             std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < w.entries.size(); ++i)
    for (std::size_t j = i + 1; j < w.entries.size(); ++j)
      if (w.entries[i].model == w.entries[j].model)
        fail("workload: duplicate model " + w.entries[i].model);
}

double WorkloadSpec::rate_at(const std::string& model, double t) const {
  for (const auto& e : entries) {
    if (e.model != model) continue;
    double rate = 0.0;
    for (const auto& rp : e.schedule) {
      if (rp.start_s > t) break;
      rate = rp.rate_rps;
    }
    return rate;
  }
  return 0.0;
}

double WorkloadSpec::last_change_s() const {
  double last = 0.0;
  for (const auto& e : entries)
    for (const auto& rp : e.schedule) last = std::max(last, rp.start_s);
  return last;
}

WorkloadSpec parse_workload(const std::string& json_text) {
  const json j = parse_json_text(json_text);
  WorkloadSpec w;
  if (!j.contains("models") || !j["models"].is_array())
    fail("workload file: missing models array");
  for (const json& jm : j["models"]) {
    WorkloadEntry e;
    e.model = jm.value("name", std::string{});
    if (!jm.contains("schedule") || !jm["schedule"].is_array())
      fail("workload " + e.model + ": missing schedule array");
    for (const json& js : jm["schedule"])
      e.schedule.push_back({js.value("start_s", 0.0), js.value("rate_rps", 0.0)});
    w.entries.push_back(std::move(e));
  }
  validate(w);
  return w;
}

WorkloadSpec load_workload(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_workload(ss.str());
}

std::string serialize_workload(const WorkloadSpec& w) {
  json jm = json::array();
  for (const auto& e : w.entries) {
    json js = json::array();
    for (const auto& rp : e.schedule)
      js.push_back({{"start_s", rp.start_s}, {"rate_rps", rp.rate_rps}});
    jm.push_back({{"name", e.model}, {"schedule", js}});
  }
  return json{{"models", jm}}.dump(2) + "\n";
}

// --- Configurations ----------------------------------------------------------

std::vector<std::string> configuration_violations(const Configuration& cfg,
                                                  const ProfileSet& set) {
  std::vector<std::string> out;
  int core_sum = 0;
  for (const auto& m : set.models) {
    auto pit = cfg.partitions.find(m.name);
    auto kit = cfg.cores.find(m.name);
    if (pit == cfg.partitions.end()) {
      out.push_back("missing partition for model " + m.name);
      continue;
    }
    const int p = pit->second;
    const int k = (kit == cfg.cores.end()) ? 0 : kit->second;
    core_sum += k;
    if (p < 0 || p > m.max_partition())
      out.push_back("partition out of range for " + m.name + ": " + std::to_string(p));
    if (k < 0 || k > set.hardware.max_cores)
      out.push_back("cores out of range for " + m.name + ": " + std::to_string(k));
    if (p >= 0 && p <= m.max_partition()) {
      if (p < m.max_partition() && k < 1)
        out.push_back("model " + m.name + " has a CPU suffix but no core");
      if (p == m.max_partition() && k != 0)
        out.push_back("model " + m.name + " is fully on the accelerator but holds cores");
    }
  }
  for (const auto& [name, p] : cfg.partitions)
    if (set.index_of(name) < 0) out.push_back("configured model not in profiles: " + name);
  if (core_sum > set.hardware.max_cores)
    out.push_back("total cores " + std::to_string(core_sum) + " exceed capacity " +
                  std::to_string(set.hardware.max_cores));
  return out;
}

Configuration parse_configuration(const std::string& json_text) {
  const json j = parse_json_text(json_text);
  Configuration cfg;
  if (!j.contains("partitions") || !j["partitions"].is_object())
    fail("configuration: missing partitions object");
  for (auto it = j["partitions"].begin(); it != j["partitions"].end(); ++it)
    cfg.partitions[it.key()] = it.value().get<int>();
  if (j.contains("cores"))
    for (auto it = j["cores"].begin(); it != j["cores"].end(); ++it)
      cfg.cores[it.key()] = it.value().get<int>();
  return cfg;
}

Configuration load_configuration(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_configuration(ss.str());
}

std::string serialize_configuration(const Configuration& cfg) {
  return json{{"partitions", cfg.partitions}, {"cores", cfg.cores}}.dump(2) + "\n";
}

}  // namespace splitsim
