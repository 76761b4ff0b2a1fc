// experiments.hpp — batch harness reproducing the statistical and fidelity
// studies: config schema, cell engines, study runners, and file IO.

#pragma once

#include "json.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "spinnet/control.hpp"
#include "spinnet/deltamax.hpp"
#include "spinnet/dephasing.hpp"
#include "spinnet/dynamics.hpp"
#include "spinnet/spin_model.hpp"
#include "spinnet/stats.hpp"

namespace spinnet::experiments {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "spinnet 0.1.0";

// Shortest round-trip decimal representation; stable across runs.
std::string format_double(double v);

// ---------------------------------- config ----------------------------------

struct DephasingConfig {
    int count = 100;
    std::uint64_t seed = 42;
    std::vector<double> gammas{0.05};
    std::vector<std::string> files;  // pre-sampled process files override sampling
};

struct GridConfig {
    double log10_start = -6.0;
    double log10_stop = 0.0;
    int count = 50;

    deltamax::GridSpec spec() const { return deltamax::GridSpec{log10_start, log10_stop, count}; }
};

struct ExperimentConfig {
    std::string experiment = "deltamax";
    model::NetworkSpec network{model::Topology::chain, 4, 1.0, {}};
    std::vector<model::PerturbationKind> perturbations;  // empty -> topology default
    DephasingConfig dephasing;
    GridConfig grid;
    std::vector<double> explicit_deltas;  // poles/sweep override; fidelity delta levels
    std::vector<double> fidelity_gammas{0.0, 0.001, 0.01, 0.1};
    std::string controller_file;
    std::string output_dir = "out";
    int threads = 0;
    bool refine = false;
    bool dump_generators = false;
    std::uint64_t stats_seed = 12345;

    std::vector<model::PerturbationKind> resolved_perturbations() const;
    deltamax::Config deltamax_config() const;

    static ExperimentConfig from_json(const json& j);  // throws ConfigError
    static ExperimentConfig load(const std::string& path);
    json to_json() const;
};

// ----------------------------------- io -------------------------------------

json process_to_json(const dephasing::DephasingProcess& p);
dephasing::DephasingProcess process_from_json(const json& j);

json controller_to_json(const control::Controller& c);
control::Controller controller_from_json(const json& j);
void save_controllers(const std::string& path, const std::vector<control::Controller>& list);
std::vector<control::Controller> load_controllers(const std::string& path);

json deltamax_result_to_json(const deltamax::DeltaMaxResult& r);

void write_file(const std::string& path, const std::string& content);
std::uint64_t config_hash(const json& j);

// ------------------------------- cell engines -------------------------------

struct DeltaMaxCell {
    std::string structure;
    double gamma = 0.0;
    int controller_id = -1;  // -1 when uncontrolled
    int process_id = 0;
    deltamax::DeltaMaxResult result;
    std::string error;  // non-empty when the cell threw
};

struct DeltaMaxBatch {
    model::NetworkSpec network;
    std::vector<model::PerturbationKind> kinds;
    std::vector<dephasing::DephasingProcess> processes;  // gamma replaced per cell
    std::vector<double> gammas;
    std::vector<control::Controller> controllers;  // empty -> uncontrolled
    deltamax::Config dm;
    int threads = 1;
};

// One DeltaMaxResult per (structure, gamma[, controller], process), ordered by
// that key regardless of scheduling.
std::vector<DeltaMaxCell> run_deltamax_batch(const DeltaMaxBatch& batch);

struct FidelityCell {
    int controller_id = 0;
    int process_id = 0;
    double gamma = 0.0;
    double delta = 0.0;
    std::string structure;
    double tf = 0.0;
    double fidelity = 0.0;
    double error = 0.0;  // 1 - fidelity
    std::string failure;
};

struct FidelityBatch {
    model::NetworkSpec network;  // controls overridden per controller
    model::PerturbationKind kind;
    std::vector<control::Controller> controllers;
    std::vector<dephasing::DephasingProcess> processes;
    std::vector<double> gammas;
    std::vector<double> deltas;
    int threads = 1;
    double ambiguity_threshold = 0.5;
};

std::vector<FidelityCell> run_fidelity_batch(const FidelityBatch& batch);

// ------------------------------ study runners -------------------------------

struct StudyOutcome {
    int total_cells = 0;
    std::vector<std::string> failures;

    int exit_code() const { return failures.empty() ? 0 : 2; }
};

// Full layout: summary.csv, cells/*.json, stats.json, manifest.json.
StudyOutcome run_deltamax_study(const ExperimentConfig& cfg, std::ostream* log = nullptr);
StudyOutcome run_fidelity_study(const ExperimentConfig& cfg, std::ostream* log = nullptr);

// Processes for a config: sampled (deterministic in seed) or loaded from files.
std::vector<dephasing::DephasingProcess> config_processes(const ExperimentConfig& cfg);

} // namespace spinnet::experiments
