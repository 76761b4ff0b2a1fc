#include "spinnet/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "spinnet/parallel.hpp"
#include "spinnet/transfer.hpp"

namespace spinnet::experiments {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// ---------------------------------- config ----------------------------------

std::vector<model::PerturbationKind> ExperimentConfig::resolved_perturbations() const {
    if (!perturbations.empty()) return perturbations;
    if (network.topology == model::Topology::ring) {
        // cyclic symmetry: one coupling perturbation represents them all
        return {model::PerturbationKind{model::PerturbationKind::Type::coupling, 1}};
    }
    std::vector<model::PerturbationKind> kinds;
    for (int i = 1; i <= network.n - 1; ++i) {
        kinds.push_back(model::PerturbationKind{model::PerturbationKind::Type::coupling, i});
    }
    return kinds;
}

deltamax::Config ExperimentConfig::deltamax_config() const {
    deltamax::Config cfg;
    cfg.grid = grid.spec();
    cfg.refine = refine;
    return cfg;
}

namespace {

template <typename T>
T get_or(const json& j, const std::string& key, const T& fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("bad value for '" + key + "': " + e.what());
    }
}

std::vector<double> number_list(const json& j, const std::string& key, std::vector<double> fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) throw ConfigError("'" + key + "' must be a number or array");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(e.get<double>());
    return out;
}

} // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig cfg;
    try {
        cfg.experiment = get_or<std::string>(j, "experiment", cfg.experiment);

        if (j.contains("network")) {
            const auto& net = j.at("network");
            cfg.network.topology = model::topology_from_string(get_or<std::string>(net, "topology", "chain"));
            cfg.network.n = get_or<int>(net, "n", 4);
            cfg.network.coupling = get_or<double>(net, "coupling", 1.0);
            if (net.contains("controls")) {
                const auto c = net.at("controls").get<std::vector<double>>();
                cfg.network.controls = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
            }
            if (net.contains("perturbation")) {
                cfg.perturbations.push_back(model::PerturbationKind::parse(net.at("perturbation").get<std::string>()));
            }
            cfg.network.validate();
        }
        if (j.contains("perturbations")) {
            cfg.perturbations.clear();
            for (const auto& p : j.at("perturbations")) {
                cfg.perturbations.push_back(model::PerturbationKind::parse(p.get<std::string>()));
            }
        }
        if (j.contains("dephasing")) {
            const auto& d = j.at("dephasing");
            cfg.dephasing.count = get_or<int>(d, "count", cfg.dephasing.count);
            cfg.dephasing.seed = get_or<std::uint64_t>(d, "seed", cfg.dephasing.seed);
            cfg.dephasing.gammas = number_list(d, "gamma", cfg.dephasing.gammas);
            cfg.dephasing.files = get_or<std::vector<std::string>>(d, "files", {});
            if (cfg.dephasing.count < 1) throw ConfigError("dephasing.count must be >= 1");
            for (double g : cfg.dephasing.gammas) {
                if (g < 0.0) throw ConfigError("gamma must be nonnegative");
            }
        }
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            cfg.grid.log10_start = get_or<double>(g, "start", cfg.grid.log10_start);
            cfg.grid.log10_stop = get_or<double>(g, "stop", cfg.grid.log10_stop);
            cfg.grid.count = get_or<int>(g, "count", cfg.grid.count);
            if (cfg.grid.count < 2 || cfg.grid.log10_stop <= cfg.grid.log10_start) {
                throw ConfigError("grid must have count >= 2 and stop > start");
            }
        }
        cfg.explicit_deltas = number_list(j, "deltas", {});
        cfg.fidelity_gammas = number_list(j, "fidelity_gammas", cfg.fidelity_gammas);
        cfg.controller_file = get_or<std::string>(j, "controllers", cfg.controller_file);
        if (j.contains("output")) {
            cfg.output_dir = get_or<std::string>(j.at("output"), "dir", cfg.output_dir);
        }
        cfg.threads = get_or<int>(j, "threads", cfg.threads);
        cfg.refine = get_or<bool>(j, "refine", cfg.refine);
        cfg.dump_generators = get_or<bool>(j, "dump_generators", cfg.dump_generators);
        cfg.stats_seed = get_or<std::uint64_t>(j, "stats_seed", cfg.stats_seed);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    } catch (const InvalidSpecError& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(j);
}

json ExperimentConfig::to_json() const {
    json j;
    j["experiment"] = experiment;
    json net;
    net["topology"] = model::to_string(network.topology);
    net["n"] = network.n;
    net["coupling"] = network.coupling;
    const Eigen::VectorXd c = network.control_vector();
    net["controls"] = std::vector<double>(c.data(), c.data() + c.size());
    j["network"] = net;
    json perts = json::array();
    for (const auto& p : resolved_perturbations()) perts.push_back(p.str());
    j["perturbations"] = perts;
    j["dephasing"] = {{"count", dephasing.count}, {"seed", dephasing.seed}, {"gamma", dephasing.gammas},
                      {"files", dephasing.files}};
    j["grid"] = {{"start", grid.log10_start}, {"stop", grid.log10_stop}, {"count", grid.count}};
    if (!explicit_deltas.empty()) j["deltas"] = explicit_deltas;
    j["fidelity_gammas"] = fidelity_gammas;
    if (!controller_file.empty()) j["controllers"] = controller_file;
    j["output"] = {{"dir", output_dir}};
    j["threads"] = threads;
    j["refine"] = refine;
    j["dump_generators"] = dump_generators;
    j["stats_seed"] = stats_seed;
    return j;
}

// ----------------------------------- io -------------------------------------

json process_to_json(const dephasing::DephasingProcess& p) {
    json j;
    j["n"] = p.n;
    j["k"] = p.k;
    j["gamma"] = p.gamma;
    json rows = json::array();
    for (int k = 0; k < p.k; ++k) {
        json row = json::array();
        for (int n = 0; n < p.n; ++n) row.push_back(p.coeffs(k, n));
        rows.push_back(row);
    }
    j["coeffs"] = rows;
    return j;
}

dephasing::DephasingProcess process_from_json(const json& j) {
    dephasing::DephasingProcess p;
    try {
        p.n = j.at("n").get<int>();
        p.k = j.at("k").get<int>();
        p.gamma = j.at("gamma").get<double>();
        p.coeffs.resize(p.k, p.n);
        const auto& rows = j.at("coeffs");
        if (static_cast<int>(rows.size()) != p.k) throw ConfigError("coeffs row count mismatch");
        for (int k = 0; k < p.k; ++k) {
            if (static_cast<int>(rows.at(k).size()) != p.n) throw ConfigError("coeffs column count mismatch");
            for (int n = 0; n < p.n; ++n) p.coeffs(k, n) = rows.at(k).at(n).get<double>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed process JSON: ") + e.what());
    }
    return p;
}

json controller_to_json(const control::Controller& c) {
    json j;
    j["d"] = std::vector<double>(c.d.data(), c.d.data() + c.d.size());
    j["tf"] = c.tf;
    j["f0"] = c.f0;
    j["in"] = c.in_node;
    j["out"] = c.out_node;
    j["seed"] = c.seed;
    return j;
}

control::Controller controller_from_json(const json& j) {
    control::Controller c;
    try {
        const auto d = j.at("d").get<std::vector<double>>();
        c.d = Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
        c.tf = j.at("tf").get<double>();
        c.f0 = j.at("f0").get<double>();
        c.in_node = j.at("in").get<int>();
        c.out_node = j.at("out").get<int>();
        c.seed = get_or<std::uint64_t>(j, "seed", 0);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed controller JSON: ") + e.what());
    }
    return c;
}

void save_controllers(const std::string& path, const std::vector<control::Controller>& list) {
    json arr = json::array();
    for (const auto& c : list) arr.push_back(controller_to_json(c));
    write_file(path, arr.dump(2) + "\n");
}

std::vector<control::Controller> load_controllers(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open controller file: " + path);
    json arr;
    try {
        in >> arr;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("controller file is not valid JSON: ") + e.what());
    }
    std::vector<control::Controller> out;
    for (const auto& j : arr) out.push_back(controller_from_json(j));
    return out;
}

json deltamax_result_to_json(const deltamax::DeltaMaxResult& r) {
    json j;
    if (r.delta_max) {
        j["delta_max"] = *r.delta_max;
    } else {
        j["delta_max"] = nullptr;
    }
    j["fit"] = {{"type", r.fit.type == deltamax::FitModel::Type::power_law ? "power_law" : "spline"},
                {"a", r.fit.a},
                {"b", r.fit.b},
                {"r2", r.fit.r2}};
    json grid = json::array();
    for (const auto& p : r.grid) {
        grid.push_back({{"delta", p.delta},
                        {"norm", p.norm},
                        {"omega_crit", p.omega_crit},
                        {"outlier", p.outlier},
                        {"ambiguous", p.ambiguous}});
    }
    j["grid"] = grid;
    j["fp_residual"] = r.fp_residual;
    j["closed_system"] = r.closed_system;
    if (!r.failure.empty()) j["failure"] = r.failure;
    return j;
}

void write_file(const std::string& path, const std::string& content) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << content;
}

std::uint64_t config_hash(const json& j) {
    const std::string dump = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

// ------------------------------- cell engines -------------------------------

std::vector<dephasing::DephasingProcess> config_processes(const ExperimentConfig& cfg) {
    std::vector<dephasing::DephasingProcess> processes;
    if (!cfg.dephasing.files.empty()) {
        for (const auto& f : cfg.dephasing.files) {
            std::ifstream in(f);
            if (!in) throw ConfigError("cannot open process file: " + f);
            json j;
            in >> j;
            processes.push_back(process_from_json(j));
        }
        return processes;
    }
    return dephasing::sample_processes(cfg.network.n, cfg.dephasing.count, cfg.dephasing.seed, 1.0);
}

std::vector<DeltaMaxCell> run_deltamax_batch(const DeltaMaxBatch& batch) {
    batch.network.validate();
    const bool controlled = !batch.controllers.empty();
    const std::size_t n_controllers = controlled ? batch.controllers.size() : 1;
    const std::size_t n_structures = batch.kinds.size();
    const std::size_t n_gammas = batch.gammas.size();
    const std::size_t n_processes = batch.processes.size();

    // One work unit per (controller, gamma, process): shares the nominal
    // generator across structures.
    const std::size_t units = n_controllers * n_gammas * n_processes;
    const std::size_t total = units * n_structures;
    std::vector<DeltaMaxCell> cells(total);

    const auto basis = bloch::build_basis(batch.network.n);
    parallel_for(units, batch.threads, [&](std::size_t u) {
        const std::size_t ci = u / (n_gammas * n_processes);
        const std::size_t gi = (u / n_processes) % n_gammas;
        const std::size_t pi = u % n_processes;

        model::NetworkSpec net = batch.network;
        if (controlled) net.controls = batch.controllers[ci].d;
        const auto process = batch.processes[pi].with_gamma(batch.gammas[gi]);

        model::Hamiltonian h;
        bloch::BlochGenerator nominal;
        std::string unit_error;
        try {
            h = model::build_hamiltonian(net);
            nominal = bloch::nominal_generator(h, process, basis);
        } catch (const std::exception& e) {
            unit_error = e.what();
        }

        for (std::size_t si = 0; si < n_structures; ++si) {
            const std::size_t slot = ((si * n_gammas + gi) * n_controllers + ci) * n_processes + pi;
            DeltaMaxCell& cell = cells[slot];
            cell.structure = batch.kinds[si].str();
            cell.gamma = batch.gammas[gi];
            cell.controller_id = controlled ? static_cast<int>(ci) : -1;
            cell.process_id = static_cast<int>(pi);
            if (!unit_error.empty()) {
                cell.error = unit_error;
                continue;
            }
            try {
                const auto structure = model::build_perturbation(net, batch.kinds[si]);
                cell.result = deltamax::delta_max(h, structure, process, batch.dm, basis, nominal);
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
        }
    });
    return cells;
}

std::vector<FidelityCell> run_fidelity_batch(const FidelityBatch& batch) {
    batch.network.validate();
    if (batch.controllers.empty()) throw ConfigError("fidelity study requires controllers");
    const std::size_t n_controllers = batch.controllers.size();
    const std::size_t n_processes = batch.processes.size();
    const std::size_t n_gammas = batch.gammas.size();
    const std::size_t n_deltas = batch.deltas.size();

    const std::size_t units = n_controllers * n_processes;
    std::vector<FidelityCell> cells(units * n_gammas * n_deltas);

    const auto basis = bloch::build_basis(batch.network.n);
    parallel_for(units, batch.threads, [&](std::size_t u) {
        const std::size_t ci = u / n_processes;
        const std::size_t pi = u % n_processes;
        const auto& ctrl = batch.controllers[ci];

        model::NetworkSpec net = batch.network;
        net.controls = ctrl.d;

        const auto rho_in = dynamics::site_state(net.n, ctrl.in_node);
        const auto rho_out = dynamics::site_state(net.n, ctrl.out_node);

        for (std::size_t gi = 0; gi < n_gammas; ++gi) {
            const auto process = batch.processes[pi].with_gamma(batch.gammas[gi]);
            model::Hamiltonian h;
            bloch::BlochGenerator nominal;
            std::string unit_error;
            try {
                h = model::build_hamiltonian(net);
                nominal = bloch::nominal_generator(h, process, basis);
            } catch (const std::exception& e) {
                unit_error = e.what();
            }
            for (std::size_t di = 0; di < n_deltas; ++di) {
                const std::size_t slot = ((ci * n_processes + pi) * n_gammas + gi) * n_deltas + di;
                FidelityCell& cell = cells[slot];
                cell.controller_id = static_cast<int>(ci);
                cell.process_id = static_cast<int>(pi);
                cell.gamma = batch.gammas[gi];
                cell.delta = batch.deltas[di];
                cell.structure = batch.kind.str();
                cell.tf = ctrl.tf;
                if (!unit_error.empty()) {
                    cell.failure = unit_error;
                    continue;
                }
                try {
                    Eigen::MatrixXd generator;
                    if (batch.deltas[di] == 0.0) {
                        generator = nominal.a;
                    } else {
                        const auto structure = model::build_perturbation(net, batch.kind);
                        dephasing::MatchOptions match;
                        match.ambiguity_threshold = batch.ambiguity_threshold;
                        match.allow_ambiguous = true;
                        generator = bloch::assemble(h, process, batch.deltas[di], structure, nominal, basis, match)
                                        .perturbed.a;
                    }
                    const auto f = dynamics::fidelity(generator, rho_in, rho_out, ctrl.tf, basis);
                    cell.fidelity = f.fidelity;
                    cell.error = f.error;
                } catch (const std::exception& e) {
                    cell.failure = e.what();
                }
            }
        }
    });
    return cells;
}

// ------------------------------ study runners -------------------------------

namespace {

std::string sanitize(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        if (c == ':' || c == '/' || c == ' ') c = '_';
    }
    return out;
}

std::string cell_filename(const DeltaMaxCell& cell) {
    std::ostringstream name;
    name << sanitize(cell.structure) << "__g" << format_double(cell.gamma);
    if (cell.controller_id >= 0) name << "__c" << cell.controller_id;
    name << "__p" << cell.process_id << ".json";
    return name.str();
}

json stat_summary_deltamax(const std::vector<DeltaMaxCell>& cells, std::uint64_t stats_seed) {
    // group key: (structure, gamma, controller)
    std::map<std::tuple<std::string, double, int>, std::map<int, double>> groups;
    for (const auto& c : cells) {
        if (!c.error.empty() || !c.result.delta_max) continue;
        groups[{c.structure, c.gamma, c.controller_id}][c.process_id] = *c.result.delta_max;
    }

    json out;
    json group_stats = json::array();
    for (const auto& [key, by_process] : groups) {
        std::vector<double> values;
        values.reserve(by_process.size());
        for (const auto& [pid, v] : by_process) values.push_back(v);
        json g;
        g["structure"] = std::get<0>(key);
        g["gamma"] = std::get<1>(key);
        g["controller"] = std::get<2>(key);
        g["count"] = values.size();
        if (!values.empty()) {
            const auto q = stats::summarize(values);
            g["min"] = q.min;
            g["q1"] = q.q1;
            g["median"] = q.median;
            g["q3"] = q.q3;
            g["max"] = q.max;
        }
        if (values.size() >= 20) {
            try {
                g["lilliefors_p"] = stats::lilliefors_test(values, {10000, stats_seed});
            } catch (const ZeroVarianceError&) {
                g["lilliefors_p"] = nullptr;
            }
        }
        group_stats.push_back(g);
    }
    out["groups"] = group_stats;

    // Pearson between structures over shared processes, per (gamma, controller)
    json correlations = json::array();
    std::map<std::pair<double, int>, std::vector<std::pair<std::string, const std::map<int, double>*>>> by_cell;
    for (const auto& [key, by_process] : groups) {
        by_cell[{std::get<1>(key), std::get<2>(key)}].emplace_back(std::get<0>(key), &by_process);
    }
    for (const auto& [cell_key, structs] : by_cell) {
        for (std::size_t i = 0; i < structs.size(); ++i) {
            for (std::size_t j = i + 1; j < structs.size(); ++j) {
                std::vector<double> x, y;
                for (const auto& [pid, v] : *structs[i].second) {
                    const auto it = structs[j].second->find(pid);
                    if (it != structs[j].second->end()) {
                        x.push_back(v);
                        y.push_back(it->second);
                    }
                }
                if (x.size() < 3) continue;
                json c;
                c["gamma"] = cell_key.first;
                c["controller"] = cell_key.second;
                c["a"] = structs[i].first;
                c["b"] = structs[j].first;
                try {
                    c["pearson"] = stats::pearson(x, y);
                } catch (const ZeroVarianceError&) {
                    c["pearson"] = nullptr;
                }
                c["count"] = x.size();
                correlations.push_back(c);
            }
        }
    }
    out["correlations"] = correlations;

    // Median vs gamma scaling per (structure, controller), needs >= 3 gammas
    json scalings = json::array();
    std::map<std::pair<std::string, int>, std::vector<std::pair<double, double>>> medians;
    for (const auto& [key, by_process] : groups) {
        std::vector<double> values;
        for (const auto& [pid, v] : by_process) values.push_back(v);
        if (values.empty()) continue;
        medians[{std::get<0>(key), std::get<2>(key)}].emplace_back(std::get<1>(key), stats::median(values));
    }
    for (const auto& [key, pts] : medians) {
        if (pts.size() < 3) continue;
        std::vector<double> gs, ms;
        for (const auto& [g, m] : pts) {
            gs.push_back(g);
            ms.push_back(m);
        }
        json s;
        s["structure"] = key.first;
        s["controller"] = key.second;
        try {
            const auto fit = stats::scaling_fit(gs, ms);
            s["exponent"] = fit.exponent;
            s["ci_lo"] = fit.ci_lo;
            s["ci_hi"] = fit.ci_hi;
        } catch (const Error&) {
            s["exponent"] = nullptr;
        }
        scalings.push_back(s);
    }
    out["median_vs_gamma"] = scalings;
    return out;
}

json manifest_json(const ExperimentConfig& cfg, std::size_t total, const std::vector<std::string>& failures) {
    json m;
    m["version"] = kVersion;
    m["config"] = cfg.to_json();
    m["config_hash"] = config_hash(cfg.to_json());
    m["seed"] = cfg.dephasing.seed;
    m["total_cells"] = total;
    m["failures"] = failures;
    return m;
}

} // namespace

StudyOutcome run_deltamax_study(const ExperimentConfig& cfg, std::ostream* log) {
    DeltaMaxBatch batch;
    batch.network = cfg.network;
    batch.kinds = cfg.resolved_perturbations();
    batch.processes = config_processes(cfg);
    batch.gammas = cfg.dephasing.gammas;
    batch.dm = cfg.deltamax_config();
    batch.threads = resolve_threads(cfg.threads);
    if (!cfg.controller_file.empty()) batch.controllers = load_controllers(cfg.controller_file);

    if (log != nullptr) {
        *log << "deltamax study: " << batch.kinds.size() << " structures x " << batch.gammas.size()
             << " gammas x " << std::max<std::size_t>(batch.controllers.size(), 1) << " controllers x "
             << batch.processes.size() << " processes\n";
    }
    const auto cells = run_deltamax_batch(batch);

    StudyOutcome outcome;
    outcome.total_cells = static_cast<int>(cells.size());

    std::ostringstream csv;
    csv << "structure,gamma,controller_id,process_id,delta_max,fit_type,a,b,r2,fp_residual,outliers,failure\n";
    for (const auto& c : cells) {
        const std::string file = cell_filename(c);
        json cj = deltamax_result_to_json(c.result);
        if (!c.error.empty()) cj["failure"] = c.error;
        write_file(cfg.output_dir + "/cells/" + file, cj.dump(2) + "\n");

        const bool ok = c.error.empty();
        const auto& r = c.result;
        csv << c.structure << ',' << format_double(c.gamma) << ',' << c.controller_id << ',' << c.process_id
            << ',';
        if (ok && r.delta_max) csv << format_double(*r.delta_max);
        csv << ',' << (r.fit.type == deltamax::FitModel::Type::power_law ? "power_law" : "spline") << ','
            << format_double(r.fit.a) << ',' << format_double(r.fit.b) << ',' << format_double(r.fit.r2) << ','
            << format_double(r.fp_residual) << ',' << r.outlier_indices.size() << ','
            << (ok ? r.failure : c.error) << '\n';
        if (!ok) {
            outcome.failures.push_back(file + ": " + c.error);
        }
    }
    write_file(cfg.output_dir + "/summary.csv", csv.str());
    write_file(cfg.output_dir + "/stats.json", stat_summary_deltamax(cells, cfg.stats_seed).dump(2) + "\n");
    write_file(cfg.output_dir + "/manifest.json", manifest_json(cfg, cells.size(), outcome.failures).dump(2) + "\n");
    if (log != nullptr) {
        *log << "wrote " << cells.size() << " cells to " << cfg.output_dir << " (" << outcome.failures.size()
             << " failures)\n";
    }
    return outcome;
}

StudyOutcome run_fidelity_study(const ExperimentConfig& cfg, std::ostream* log) {
    if (cfg.controller_file.empty()) throw ConfigError("fidelity study requires a controller file");
    FidelityBatch batch;
    batch.network = cfg.network;
    const auto kinds = cfg.resolved_perturbations();
    batch.kind = kinds.front();
    batch.controllers = load_controllers(cfg.controller_file);
    batch.processes = config_processes(cfg);
    batch.gammas = cfg.fidelity_gammas;
    batch.deltas = cfg.explicit_deltas.empty() ? std::vector<double>{0.0, 0.001, 0.01, 0.1}
                                               : cfg.explicit_deltas;
    batch.threads = resolve_threads(cfg.threads);

    if (log != nullptr) {
        *log << "fidelity study: " << batch.controllers.size() << " controllers x " << batch.processes.size()
             << " processes x " << batch.gammas.size() << " gammas x " << batch.deltas.size() << " deltas\n";
    }
    const auto cells = run_fidelity_batch(batch);

    StudyOutcome outcome;
    outcome.total_cells = static_cast<int>(cells.size());

    std::ostringstream csv;
    csv << "controller_id,process_id,gamma,delta,structure,tf,fidelity,error\n";
    for (const auto& c : cells) {
        csv << c.controller_id << ',' << c.process_id << ',' << format_double(c.gamma) << ','
            << format_double(c.delta) << ',' << c.structure << ',' << format_double(c.tf) << ','
            << format_double(c.fidelity) << ',' << format_double(c.error) << '\n';
        if (!c.failure.empty()) {
            outcome.failures.push_back("c" + std::to_string(c.controller_id) + "_p" +
                                       std::to_string(c.process_id) + "_g" + format_double(c.gamma) + "_d" +
                                       format_double(c.delta) + ": " + c.failure);
        }
    }
    write_file(cfg.output_dir + "/summary.csv", csv.str());

    // per (gamma, delta) error quartiles over (controller, process)
    std::map<std::pair<double, double>, std::vector<double>> by_level;
    for (const auto& c : cells) {
        if (c.failure.empty()) by_level[{c.gamma, c.delta}].push_back(c.error);
    }
    json stats_json;
    json levels = json::array();
    for (const auto& [key, errors] : by_level) {
        const auto q = stats::summarize(errors);
        levels.push_back({{"gamma", key.first},
                          {"delta", key.second},
                          {"count", errors.size()},
                          {"min", q.min},
                          {"q1", q.q1},
                          {"median", q.median},
                          {"q3", q.q3},
                          {"max", q.max}});
    }
    stats_json["error_distributions"] = levels;
    write_file(cfg.output_dir + "/stats.json", stats_json.dump(2) + "\n");

    // one cell file per (controller, process) with the gamma x delta table
    for (std::size_t ci = 0; ci < batch.controllers.size(); ++ci) {
        for (std::size_t pi = 0; pi < batch.processes.size(); ++pi) {
            json rows = json::array();
            for (const auto& c : cells) {
                if (c.controller_id != static_cast<int>(ci) || c.process_id != static_cast<int>(pi)) continue;
                json r = {{"gamma", c.gamma}, {"delta", c.delta}, {"fidelity", c.fidelity}, {"error", c.error}};
                if (!c.failure.empty()) r["failure"] = c.failure;
                rows.push_back(r);
            }
            write_file(cfg.output_dir + "/cells/c" + std::to_string(ci) + "__p" + std::to_string(pi) + ".json",
                       rows.dump(2) + "\n");
        }
    }
    write_file(cfg.output_dir + "/manifest.json", manifest_json(cfg, cells.size(), outcome.failures).dump(2) + "\n");
    if (log != nullptr) {
        *log << "wrote " << cells.size() << " cells to " << cfg.output_dir << " (" << outcome.failures.size()
             << " failures)\n";
    }
    return outcome;
}

} // namespace spinnet::experiments
