#include "splitsim/scenarios.hpp"

namespace splitsim {

std::vector<SynthSpec> bundled_synth_specs() {
  // name, points, bytes, tpu_s, cpu_s, decay, input_bytes
  return {
      {"squeezenet", 2, 1'400'000, 0.004, 0.016, 0.70, 150528},
      {"mobilenetv2", 5, 4'100'000, 0.012, 0.100, 0.70, 150528},
      {"efficientnet", 6, 6'700'000, 0.030, 0.080, 0.60, 150528},
      {"mnasnet", 7, 7'100'000, 0.018, 0.150, 0.65, 150528},
      {"gpunet", 5, 12'200'000, 0.025, 0.058, 0.60, 150528},
      {"densenet201", 7, 19'700'000, 0.045, 0.160, 0.60, 150528},
      {"resnet50v2", 8, 25'300'000, 0.050, 0.170, 0.60, 150528},
      {"xception", 11, 26'100'000, 0.080, 0.300, 0.65, 150528},
      {"inceptionv4", 11, 43'200'000, 0.065, 1.200, 0.60, 268203},
  };
}

HardwareSpec bundled_hardware() {
  // 8 MB of accelerator SRAM, 320 MB/s host link (synthetic), 4 cores.
  return {8'000'000, 320e6, 4};
}

ProfileSet bundled_profile_set() {
  ProfileSet set;
  set.hardware = bundled_hardware();
  for (const auto& spec : bundled_synth_specs())
    set.models.push_back(synth_profile(spec, set.hardware));
  return set;
}

WorkloadSpec bundled_dynamic_workload() {
  WorkloadSpec w;
  w.entries.push_back({"mnasnet", {{0.0, 5.0}}});
  w.entries.push_back({"inceptionv4", {{0.0, 1.0}, {300.0, 3.0}, {600.0, 5.0}}});
  return w;
}

}  // namespace splitsim
