#pragma once

#include "splitsim/profiles.hpp"

namespace splitsim {

/// Synthetic profile parameters for the bundled model zoo. Sizes and
/// partition-point counts follow well-known CNN families; the timing numbers
/// are synthetic and exist only to give the toolkit realistic shapes.
std::vector<SynthSpec> bundled_synth_specs();

HardwareSpec bundled_hardware();

/// The full bundled corpus: bundled_hardware() plus one synthesized profile
/// per bundled spec.
ProfileSet bundled_profile_set();

/// The bundled time-varying two-model scenario: a constant-rate model next to
/// one whose rate steps up twice.
WorkloadSpec bundled_dynamic_workload();

}  // namespace splitsim
