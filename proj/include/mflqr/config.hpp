#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mflqr/constraints.hpp"
#include "mflqr/json_writer.hpp"
#include "mflqr/nlp.hpp"

namespace mflqr {

struct ConfigError : Error {
    using Error::Error;
};

// Synthesis block of an experiment configuration.
struct SynthesisSetup {
    Variant variant = Variant::Regulator;
    Matrix Q, R;
    std::optional<TrackingSpec> tracking;
    SolverOptions solver;
};

// Doublet reference used by the validate command: +/- amplitude square wave.
struct ValidateSetup {
    double amplitude = 10.0 * M_PI / 180.0;
    double period = 20.0;
    double T = 40.0;
};

struct ExperimentConfig {
    std::string preset_name = "custom";
    LtiSystem system;
    std::optional<ActuatorModel> actuator;
    double gravity = 32.174;  // ft/s^2, used by the a4d presets
    std::vector<ChirpSpec> excitation;
    double rate = 0.0;  // Hz
    double T = 0.0;     // seconds
    int substeps = 10;
    NoiseSpec noise;
    std::optional<SynthesisSetup> synthesis;
    ValidateSetup validate;
    std::string out_dir = "out";

    double dt() const { return 1.0 / rate; }

    // SynthesisSpec for this configuration (requires a synthesis block).
    SynthesisSpec synthesis_spec() const;
};

// Preset coefficient sets. `a4d` and `b747` are 4-state lateral models with
// full-state measurement; `a4d-mixed` appends the two first-order actuator
// states to the a4d model.
LtiSystem preset_system(const std::string& name, double gravity);
std::optional<ActuatorModel> preset_actuator(const std::string& name);

ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "config");
JsonValue serialize_config(const ExperimentConfig& cfg);

// Angle values accept plain numbers (radians) or strings with a unit
// suffix: "5 deg", "0.1 rad".
double parse_angle(const std::string& text);

} // namespace mflqr
