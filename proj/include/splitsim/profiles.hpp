#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace splitsim {

/// Raised when an input file or a constructed object violates the documented
/// schema. The message names the offending model/field/index.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HardwareSpec {
  std::int64_t sram_capacity_bytes = 0;  // accelerator weight memory C
  double bandwidth_bytes_per_s = 0.0;    // host-to-accelerator bandwidth B
  int max_cores = 0;                     // physical CPU cores K_max

  bool operator==(const HardwareSpec&) const = default;
};

void validate(const HardwareSpec& hw);

/// One candidate split of a model. Index p ranges over 0..P: p = 0 runs the
/// whole model on the CPU, p = P runs it entirely on the accelerator.
struct PartitionPoint {
  std::int64_t prefix_bytes = 0;        // weight bytes of the accelerator prefix
  double tpu_prefix_s = 0.0;            // prefix service time, incl. intra-model swap
  double cpu_suffix_s = 0.0;            // suffix service time on a single core
  std::int64_t intermediate_bytes = 0;  // activation tensor crossing the bus at p

  bool operator==(const PartitionPoint&) const = default;
};

struct ModelProfile {
  std::string name;
  std::int64_t input_bytes = 0;
  std::vector<PartitionPoint> points;  // points[p], p = 0..P

  int max_partition() const { return static_cast<int>(points.size()) - 1; }
  std::int64_t prefix_bytes(int p) const { return points.at(p).prefix_bytes; }
  double tpu_prefix_s(int p) const { return points.at(p).tpu_prefix_s; }
  double cpu_suffix_s(int p) const { return points.at(p).cpu_suffix_s; }

  /// Bytes shipped back over the bus after the accelerator prefix at p.
  /// Interior points use the profiled intermediate tensor; the final point
  /// uses the model output size recorded there (0 when not profiled).
  std::int64_t output_bytes(int p) const {
    if (p <= 0) return 0;
    return points.at(p).intermediate_bytes;
  }

  bool operator==(const ModelProfile&) const = default;
};

void validate(const ModelProfile& m);

struct ProfileSet {
  HardwareSpec hardware;
  std::vector<ModelProfile> models;

  int index_of(const std::string& name) const;          // -1 when absent
  const ModelProfile& at(const std::string& name) const;  // throws when absent

  bool operator==(const ProfileSet&) const = default;
};

void validate(const ProfileSet& set);

ProfileSet parse_profiles(const std::string& json_text);
ProfileSet load_profiles(const std::string& path);
std::string serialize_profiles(const ProfileSet& set);
void save_profiles(const ProfileSet& set, const std::string& path);

/// Weight-load latency for the prefix at p: prefix_bytes(p) / B.
double t_load(const ModelProfile& m, int p, const HardwareSpec& hw);

/// Parameters for generating a synthetic profile whose per-segment
/// accelerator advantage decays geometrically with depth and whose prefix
/// times absorb (prefix_bytes - C) / B once the prefix outgrows SRAM.
struct SynthSpec {
  std::string name;
  int num_points = 0;
  std::int64_t total_bytes = 0;
  double total_tpu_s = 0.0;
  double total_cpu_s = 0.0;
  double tpu_speedup_decay = 1.0;  // in (0, 1]; smaller = advantage fades faster
  std::int64_t input_bytes = 150528;
};

ModelProfile synth_profile(const SynthSpec& spec, const HardwareSpec& hw);

// --- Workloads ------------------------------------------------------------

struct RatePoint {
  double start_s = 0.0;
  double rate_rps = 0.0;

  bool operator==(const RatePoint&) const = default;
};

struct WorkloadEntry {
  std::string model;
  std::vector<RatePoint> schedule;  // piecewise-constant, start_s strictly increasing

  bool operator==(const WorkloadEntry&) const = default;
};

struct WorkloadSpec {
  std::vector<WorkloadEntry> entries;

  /// Rate in effect at time t (0 before the first schedule entry).
  double rate_at(const std::string& model, double t) const;
  double last_change_s() const;

  bool operator==(const WorkloadSpec&) const = default;
};

void validate(const WorkloadSpec& w);

WorkloadSpec parse_workload(const std::string& json_text);
WorkloadSpec load_workload(const std::string& path);
std::string serialize_workload(const WorkloadSpec& w);

// --- Configurations --------------------------------------------------------

/// The decision variables: per-model partition point and core allocation.
struct Configuration {
  std::map<std::string, int> partitions;
  std::map<std::string, int> cores;

  bool operator==(const Configuration&) const = default;
};

/// Returns human-readable descriptions of every violated constraint
/// (bounds, core/suffix coupling, total core capacity); empty when valid.
std::vector<std::string> configuration_violations(const Configuration& cfg,
                                                  const ProfileSet& set);

Configuration parse_configuration(const std::string& json_text);
Configuration load_configuration(const std::string& path);
std::string serialize_configuration(const Configuration& cfg);

}  // namespace splitsim
