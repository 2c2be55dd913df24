// reqc: deterministic batch front-end for the rare-earth-ion register
// simulator. Every run is reproducible from a config file plus the
// master seed; trial-level seeds are derived with a documented stable
// hash, so parallelism never changes the output bytes.

#include <atomic>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "reqc/crystal.hpp"
#include "reqc/crystal_io.hpp"
#include "reqc/distill.hpp"
#include "reqc/entanglement.hpp"
#include "reqc/readout.hpp"
#include "reqc/registers.hpp"
#include "reqc/rng.hpp"
#include "reqc/statevector.hpp"
#include "reqc/trajectory.hpp"

using nlohmann::json;
using namespace reqc;

namespace {

constexpr const char* kSchemaVersion = "reqc-output v1";

// ---------------------------------------------------------------- output

/// Shortest decimal representation that parses back bit-exactly.
std::string format_double(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

struct Cell {
    std::string text;
    json value;

    Cell(double v) : text(format_double(v)), value(v) {}
    Cell(int v) : text(std::to_string(v)), value(v) {}
    Cell(std::uint64_t v) : text(std::to_string(v)), value(v) {}
    Cell(bool v) : text(v ? "1" : "0"), value(v) {}
    Cell(const char* v) : text(v), value(v) {}
    Cell(const std::string& v) : text(v), value(v) {}
};

class Table {
public:
    Table(std::string command, std::uint64_t seed, std::vector<std::string> columns)
        : command_(std::move(command)), seed_(seed), columns_(std::move(columns)) {}

    void add_row(std::vector<Cell> cells) { rows_.push_back(std::move(cells)); }
    void add_comment(std::string line) {
        comments_.push_back({rows_.size(), std::move(line)});
    }

    void write_csv(std::ostream& out) const {
        out << "# " << kSchemaVersion << " command=" << command_ << " seed=" << seed_ << "\n";
        for (std::size_t c = 0; c < columns_.size(); ++c)
            out << columns_[c] << (c + 1 < columns_.size() ? "," : "\n");
        std::size_t next_comment = 0;
        for (std::size_t r = 0; r <= rows_.size(); ++r) {
            while (next_comment < comments_.size() && comments_[next_comment].first == r)
                out << "# " << comments_[next_comment++].second << "\n";
            if (r == rows_.size()) break;
            const auto& row = rows_[r];
            for (std::size_t c = 0; c < row.size(); ++c)
                out << row[c].text << (c + 1 < row.size() ? "," : "\n");
        }
    }

    void write_json(std::ostream& out) const {
        json doc;
        doc["schema"] = kSchemaVersion;
        doc["command"] = command_;
        doc["seed"] = seed_;
        doc["rows"] = json::array();
        for (const auto& row : rows_) {
            json obj;
            for (std::size_t c = 0; c < row.size(); ++c) obj[columns_[c]] = row[c].value;
            doc["rows"].push_back(std::move(obj));
        }
        json notes = json::array();
        for (const auto& [pos, text] : comments_) notes.push_back(text);
        if (!notes.empty()) doc["notes"] = std::move(notes);
        out << doc.dump(1) << "\n";
    }

private:
    std::string command_;
    std::uint64_t seed_ = 0;
    std::vector<std::string> columns_;
    std::vector<std::vector<Cell>> rows_;
    std::vector<std::pair<std::size_t, std::string>> comments_;
};

struct GlobalOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    std::uint64_t trials = 0; // 0: per-command default
    int parallel = 1;
    std::string out_path;
    std::string format = "csv";
};

void emit(const Table& table, const GlobalOpts& g) {
    if (g.out_path.empty()) {
        if (g.format == "json")
            table.write_json(std::cout);
        else
            table.write_csv(std::cout);
        return;
    }
    std::ofstream out(g.out_path);
    if (!out) throw error("cannot open output file '" + g.out_path + "'");
    if (g.format == "json")
        table.write_json(out);
    else
        table.write_csv(out);
}

// ---------------------------------------------------------------- config

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw parameter_error("cannot open config file '" + path + "'");
    try {
        json j;
        in >> j;
        if (!j.is_object()) throw parameter_error("config root must be a JSON object");
        return j;
    } catch (const json::exception& e) {
        throw parameter_error(std::string("config parse error: ") + e.what());
    }
}

json section(const json& cfg, const std::string& name) {
    if (cfg.contains(name)) {
        if (!cfg.at(name).is_object())
            throw parameter_error("config section '" + name + "' must be an object");
        return cfg.at(name);
    }
    return json::object();
}

template <typename T>
T opt(const json& sec, const std::string& key, T fallback) {
    if (!sec.contains(key)) return fallback;
    try {
        return sec.at(key).get<T>();
    } catch (const json::exception& e) {
        throw parameter_error("config field '" + key + "': " + e.what());
    }
}

std::vector<double> opt_list(const json& sec, const std::string& key,
                             std::vector<double> fallback) {
    if (!sec.contains(key)) return fallback;
    const auto& v = sec.at(key);
    if (v.is_number()) return {v.get<double>()};
    try {
        return v.get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw parameter_error("config field '" + key + "': " + e.what());
    }
}

// ------------------------------------------------------------- parallel

void parallel_for(std::uint64_t count, int threads,
                  const std::function<void(std::uint64_t)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::uint64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    const int n_threads = static_cast<int>(
        std::min<std::uint64_t>(static_cast<std::uint64_t>(threads), count));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t)
        pool.emplace_back([&, t] {
            try {
                for (;;) {
                    const std::uint64_t i = next.fetch_add(1);
                    if (i >= count) return;
                    fn(i);
                }
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
                next.store(count);
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ------------------------------------------------------------- commands

CrystalParams crystal_params_from(const json& sec, std::uint64_t seed) {
    CrystalParams p;
    p.box_side = opt(sec, "box_side", 1.2e-8);
    p.density = opt(sec, "density", 4.0e26);
    p.bandwidth_hz = opt(sec, "bandwidth_hz", 1.6e9);
    p.dmu_default = opt(sec, "dmu_default", 0.8e-31);
    p.seed = opt(sec, "seed", seed);
    return p;
}

ChannelPlan plan_from(const json& sec, int n_channels_with_bus) {
    ChannelPlan plan;
    plan.channel_width_hz = opt(sec, "channel_width_hz", 1.0e8);
    plan.vacated_width_hz = opt(sec, "vacated_width_hz", 2.0e8);
    const auto centers = opt_list(sec, "channel_centers_hz", {});
    if (!centers.empty()) {
        plan.centers_hz = centers;
    } else {
        const double spacing = opt(sec, "channel_spacing_hz", 3.0e8);
        const double first = opt(sec, "first_channel_hz", 1.0e8);
        for (int k = 0; k < n_channels_with_bus; ++k)
            plan.centers_hz.push_back(first + spacing * k);
    }
    return plan;
}

int cmd_gen_crystal(const json& cfg, const GlobalOpts& g) {
    const json sec = section(cfg, "gen-crystal");
    const CrystalParams p = crystal_params_from(sec, g.seed);
    const auto crystal = generate_crystal(p);
    if (g.out_path.empty()) throw parameter_error("gen-crystal requires --out PATH");
    save_crystal(crystal, g.out_path);

    std::cout << "ions: " << crystal.ions.size() << "\n";
    if (sec.contains("channel_centers_hz") || sec.contains("n_channels")) {
        const auto plan = plan_from(sec, opt(sec, "n_channels", 1));
        const auto members = assign_channels(crystal, plan);
        for (std::size_t k = 0; k < members.size(); ++k)
            std::cout << "channel " << k << " center_hz "
                      << format_double(plan.centers_hz[k]) << " occupancy "
                      << members[k].size() << "\n";
    }
    return 0;
}

struct CensusSweepPoint {
    Architecture arch;
    int n_channels;
    double nbar;
};

int cmd_census(const json& cfg, const GlobalOpts& g) {
    const json sec = section(cfg, "census");
    const std::uint64_t trials = g.trials ? g.trials : opt(sec, "trials", std::uint64_t{10000});

    CouplingParams coupling;
    coupling.g_min_hz = opt(sec, "g_min_hz", 1.0e7);
    coupling.g_ref_hz = opt(sec, "g_ref_hz", coupling.g_ref_hz);
    coupling.r_ref_m = opt(sec, "r_ref_m", coupling.r_ref_m);
    coupling.dmu_ref = opt(sec, "dmu_ref", coupling.dmu_ref);

    const double dmu = opt(sec, "dmu_default", 0.8e-31);
    const double radius = threshold_radius(coupling, dmu);
    const double box_side = opt(sec, "box_side_factor", 6.0) * radius;
    const double bandwidth = opt(sec, "bandwidth_hz", 1.6e9);
    const double width = opt(sec, "channel_width_hz", 1.0e8);

    const auto arch_names = opt(sec, "architectures", std::vector<std::string>{"bus"});
    std::vector<CensusSweepPoint> points;
    for (const auto& name : arch_names) {
        Architecture arch;
        if (name == "bus")
            arch = Architecture::bus;
        else if (name == "clique")
            arch = Architecture::clique;
        else
            throw parameter_error("census: unknown architecture '" + name + "'");
        for (double nbar : opt_list(sec, "nbar", {1.0}))
            for (double n_channels : opt_list(sec, "n_channels", {1}))
                points.push_back({arch, static_cast<int>(n_channels), nbar});
    }

    Table table("census", g.seed,
                {"architecture", "N", "nbar_analytic", "trials", "hits", "p_hat", "ci_lo",
                 "ci_hi", "p_eq1"});
    std::map<std::pair<int, double>, std::map<Architecture, double>> p_by_point;
    for (const auto& pt : points) {
        CrystalParams params;
        params.box_side = box_side;
        params.bandwidth_hz = bandwidth;
        params.dmu_default = dmu;
        const double ball = (4.0 / 3.0) * M_PI * radius * radius * radius;
        params.density = pt.nbar / (ball * width / bandwidth);

        ChannelPlan plan;
        plan.channel_width_hz = width;
        plan.vacated_width_hz = opt(sec, "vacated_width_hz", 2 * width);
        for (int k = 0; k <= pt.n_channels; ++k)
            plan.centers_hz.push_back(width + (2 * plan.vacated_width_hz + width) * k);

        const double candidates_per_crystal =
            params.density * box_side * box_side * box_side * width / bandwidth;
        const std::uint64_t crystals = std::max<std::uint64_t>(
            1, static_cast<std::uint64_t>(
                   std::ceil(static_cast<double>(trials) / candidates_per_crystal)));

        std::ostringstream tag;
        tag << "census/" << to_string(pt.arch) << "/" << pt.n_channels << "/" << pt.nbar;
        std::vector<CensusResult> partial(crystals);
        parallel_for(crystals, g.parallel, [&](std::uint64_t i) {
            CrystalParams local = params;
            local.seed = derive_seed(g.seed, tag.str(), i);
            const auto crystal = generate_crystal(local);
            const auto graph = coupling_graph(crystal, coupling);
            partial[i] = census(crystal, graph, plan, 0, pt.arch);
        });
        CensusResult total;
        total.architecture = pt.arch;
        total.n_channels = pt.n_channels;
        for (const auto& r : partial) total += r;

        const auto ci = total.ci95();
        table.add_row({to_string(pt.arch), pt.n_channels, pt.nbar, total.trials, total.hits,
                       total.p_hat(), ci.lo, ci.hi, p_register_exact(pt.nbar, pt.n_channels)});
        p_by_point[{pt.n_channels, pt.nbar}][pt.arch] = total.p_hat();
    }
    // bus-architecture gain, derivable once both architectures are swept
    for (const auto& [key, by_arch] : p_by_point) {
        if (key.first < 3 || by_arch.size() != 2) continue;
        const double clique = by_arch.at(Architecture::clique);
        if (clique <= 0) continue;
        std::ostringstream line;
        line << "bus_over_clique N=" << key.first << " nbar=" << format_double(key.second)
             << " ratio=" << format_double(by_arch.at(Architecture::bus) / clique);
        table.add_comment(line.str());
    }
    emit(table, g);
    return 0;
}

int cmd_stats(const json& cfg, const GlobalOpts& g) {
    const json sec = section(cfg, "stats");
    const auto n_list = opt_list(sec, "n_channels", {1, 2, 3, 5, 10, 100});
    const auto nbar_list = opt_list(sec, "nbar", {0.5, 1.0, 2.0, 4.6052, 6.9078});
    const double target = opt(sec, "target_p", 0.9);

    Table table("stats", g.seed,
                {"N", "nbar", "p_exact", "p_postselect", "required_nbar_approx",
                 "required_nbar_exact"});
    for (double n : n_list) {
        const int ni = static_cast<int>(n);
        const auto req = required_nbar(ni, target);
        for (double nbar : nbar_list)
            table.add_row({ni, nbar, p_register_exact(nbar, ni),
                           p_register_postselect(nbar, ni), req.approx, req.exact});
    }
    emit(table, g);
    return 0;
}

int cmd_distill(const json& cfg, const GlobalOpts& g) {
    const json sec = section(cfg, "distill");
    const std::uint64_t trials = g.trials ? g.trials : opt(sec, "trials", std::uint64_t{1000});

    DistillConfig base;
    base.branch_to_aux = opt(sec, "branch_to_aux", 1.0);
    base.max_rounds = opt(sec, "max_rounds", 1000);
    const auto alphas = opt_list(sec, "alpha_schedule", {});
    if (!alphas.empty()) base.alpha_schedule = alphas;

    const std::string trace_path = opt(sec, "trace", std::string());
    std::ofstream trace;
    if (!trace_path.empty()) {
        trace.open(trace_path);
        if (!trace) throw error("cannot open trace path '" + trace_path + "'");
    }

    Table table("distill", g.seed,
                {"n_initial", "beta", "trial", "final_occupancy", "rounds_used",
                 "total_decays"});
    for (double n_init : opt_list(sec, "n_initial", {2})) {
        for (double beta : opt_list(sec, "beta", {0.05})) {
            std::ostringstream tag;
            tag << "distill/" << n_init << "/" << beta;
            if (trace.is_open())
                trace << "# n_initial=" << n_init << " beta=" << format_double(beta) << "\n";
            std::vector<DistillOutcome> outcomes(trials);
            parallel_for(trials, g.parallel, [&](std::uint64_t t) {
                DistillConfig local = base;
                local.beta = beta;
                local.seed = derive_seed(g.seed, tag.str(), t);
                DistillObserver observer;
                if (t == 0 && trace.is_open())
                    observer = [&](const RoundTrace& rt) {
                        trace << "trial 0 round " << rt.round
                              << " alpha=" << format_double(rt.alpha)
                              << " active=" << rt.active_channels.size() << "\n";
                        for (const auto& op :
                             distill_premeasurement_ops(0, rt.active_channels, rt.alpha))
                            trace << "  " << describe(op) << "\n";
                        trace << "  outcome tagged=" << rt.result.tagged
                              << " decays=" << rt.result.decays << "\n";
                    };
                outcomes[t] = distill_until_single(static_cast<int>(n_init), local, observer);
            });
            for (std::uint64_t t = 0; t < trials; ++t) {
                int total_decays = 0;
                for (int d : outcomes[t].per_round_decays) total_decays += d;
                table.add_row({static_cast<int>(n_init), beta, static_cast<std::uint64_t>(t),
                               outcomes[t].final_occupancy, outcomes[t].rounds_used,
                               total_decays});
            }
        }
    }
    emit(table, g);
    return 0;
}

int cmd_ent_rate(const json& cfg, const GlobalOpts& g) {
    const json sec = section(cfg, "ent-rate");
    const std::uint64_t trials = g.trials ? g.trials : opt(sec, "trials", std::uint64_t{1000});
    const double coupling = opt(sec, "g", 1.0);

    std::vector<RateReport> rows(trials);
    parallel_for(trials, g.parallel, [&](std::uint64_t t) {
        Rng rng(derive_seed(g.seed, "ent-rate", t));
        const StateVector state = random_state({0, 1}, rng);
        rows[t] = rate_bound_check(state, {{0}, {1}}, coupling);
    });

    Table table("ent-rate", g.seed,
                {"trial", "entropy_bits", "edot", "p_e_tot", "bound", "satisfied",
                 "degenerate"});
    std::uint64_t violations = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        const auto& r = rows[t];
        if (!r.satisfied) ++violations;
        table.add_row({static_cast<std::uint64_t>(t), r.entropy_bits, r.edot_bits_per_s,
                       r.p_e_tot, r.bound_bits_per_s, r.satisfied, r.degenerate});
    }
    table.add_comment("violations=" + std::to_string(violations));
    emit(table, g);
    return 0;
}

int cmd_f_max(const json&, const GlobalOpts& g) {
    const auto fm = f_max();
    Table table("f-max", g.seed, {"theta_star", "f_star"});
    table.add_row({fm.theta_star, fm.f_star});
    emit(table, g);
    return 0;
}

int cmd_gate_bound(const json& cfg, const GlobalOpts& g) {
    const json sec = section(cfg, "gate-bound");
    const auto g_list = opt_list(sec, "g", {4.0});
    const auto rabi_list = opt_list(sec, "rabi", {1.0});
    const double steps_per_cycle = opt(sec, "steps_per_cycle", 2000.0);

    StateVector initial = StateVector::ground({0, 1});
    BlockadeContext ctx;
    ctx.add_pair(0, 1, 1.0);
    apply_pulse(initial, {0, kZeroOne, M_PI / 2, M_PI / 2, PulseMode::ideal_blockade, 0.0},
                ctx);
    apply_pulse(initial, {1, kZeroOne, M_PI / 2, M_PI / 2, PulseMode::ideal_blockade, 0.0},
                ctx);

    if (g_list.size() == 1 && rabi_list.size() == 1) {
        const double gg = g_list[0], rabi = rabi_list[0];
        const double dt = 2 * M_PI / (std::max(gg, rabi) * steps_per_cycle);
        const auto traj =
            simulate_gate_trajectory(initial, blockade_cz_plan(0, 1, rabi), gg, dt);
        Table table("gate-bound", g.seed, {"t", "p_e", "entropy_bits", "integral_p_e"});
        for (std::size_t i = 0; i < traj.times.size(); ++i)
            table.add_row({traj.times[i], traj.p_e[i], traj.entropy_bits[i],
                           traj.integral_p_e[i]});
        bool ok = true;
        for (std::size_t i = 0; i < traj.times.size(); ++i)
            ok = ok && traj.entropy_bits[i] <= 0.5 * gg * traj.integral_p_e[i] + 1e-9;
        std::ostringstream summary;
        summary << "g=" << format_double(gg) << " rabi=" << format_double(rabi)
                << " final_E=" << format_double(traj.entropy_bits.back())
                << " integral_p_e=" << format_double(traj.integral_p_e.back())
                << " two_over_g=" << format_double(2.0 / gg) << " bound_satisfied=" << ok;
        table.add_comment(summary.str());
        emit(table, g);
        return 0;
    }

    struct Row {
        double g = 0, rabi = 0, final_e = 0, int_pe = 0, drift = 0;
        bool ok = false;
    };
    std::vector<Row> rows;
    for (double gg : g_list)
        for (double rabi : rabi_list) rows.push_back({gg, rabi, 0, 0, 0, false});
    parallel_for(rows.size(), g.parallel, [&](std::uint64_t i) {
        auto& row = rows[i];
        const double dt = 2 * M_PI / (std::max(row.g, row.rabi) * steps_per_cycle);
        const auto traj =
            simulate_gate_trajectory(initial, blockade_cz_plan(0, 1, row.rabi), row.g, dt);
        bool ok = true;
        for (std::size_t k = 0; k < traj.times.size(); ++k)
            ok = ok && traj.entropy_bits[k] <= 0.5 * row.g * traj.integral_p_e[k] + 1e-9;
        row.final_e = traj.entropy_bits.back();
        row.int_pe = traj.integral_p_e.back();
        row.drift = traj.max_norm_drift;
        row.ok = ok;
    });
    Table table("gate-bound", g.seed,
                {"g", "rabi", "final_entropy_bits", "integral_p_e", "max_norm_drift",
                 "bound_satisfied"});
    for (const auto& row : rows)
        table.add_row({row.g, row.rabi, row.final_e, row.int_pe, row.drift, row.ok});
    emit(table, g);
    return 0;
}

ReadoutModel readout_model_from(const json& sec_in) {
    json sec = sec_in;
    // a preset file is a JSON object with the same fields; explicit
    // fields in the config section override it
    const std::string model_file = opt(sec, "model_file", std::string());
    if (!model_file.empty()) {
        json file = load_config(model_file);
        file.update(sec);
        sec = std::move(file);
    }
    ReadoutModel m = readout_preset(opt(sec, "preset", std::string("default")));
    m.emission_interval_s = opt(sec, "emission_interval_s", m.emission_interval_s);
    m.detection_efficiency = opt(sec, "detection_efficiency", m.detection_efficiency);
    m.photons_needed = opt(sec, "photons_needed", m.photons_needed);
    m.qubit_e_lifetime_s = opt(sec, "qubit_e_lifetime_s", m.qubit_e_lifetime_s);
    m.trap_probability_per_cycle =
        opt(sec, "trap_probability_per_cycle", m.trap_probability_per_cycle);
    m.homogeneous_linewidth_hz =
        opt(sec, "homogeneous_linewidth_hz", m.homogeneous_linewidth_hz);
    m.detection_threshold = opt(sec, "detection_threshold", m.detection_threshold);
    return m;
}

int cmd_readout_budget(const json& cfg, const GlobalOpts& g) {
    const json sec = section(cfg, "readout-budget");
    const auto model = readout_model_from(sec);
    const auto budget = photon_budget(model, opt(sec, "success_target", 0.99));
    Table table("readout-budget", g.seed,
                {"required_emission_interval_s", "emitted_photons", "max_trap_probability",
                 "required_cycles"});
    table.add_row({budget.required_emission_interval_s, budget.emitted_photons,
                   budget.max_trap_probability, budget.required_cycles});
    emit(table, g);
    return 0;
}

int cmd_readout_init(const json& cfg, const GlobalOpts& g) {
    const json sec = section(cfg, "readout-init");
    const std::uint64_t trials = g.trials ? g.trials : opt(sec, "trials", std::uint64_t{100});
    const int chain_length = opt(sec, "chain_length", 3);

    ScanParams scan;
    scan.resolution_hz = opt(sec, "resolution_hz", scan.resolution_hz);
    scan.pi_pulse_fidelity = opt(sec, "fidelity", 1.0);
    scan.probe_repeats = opt(sec, "probe_repeats", scan.probe_repeats);

    json model_sec = sec;
    if (!sec.contains("preset")) model_sec["preset"] = "ce";
    const auto model = readout_model_from(model_sec);

    ChainGenParams gen;
    gen.readout_freq_lo_hz = 1.0e8;
    gen.readout_freq_hi_hz = 4.0e8;
    gen.qubit_freq_lo_hz = 1.0e8;
    gen.qubit_freq_hi_hz = 1.9e9;

    struct Row {
        bool recovered = false, collision = false, failed = false;
        int n_found = 0;
        double max_err = 0;
    };
    std::vector<Row> rows(trials);
    const std::string scan_log_path = opt(sec, "scan_log", std::string());
    std::vector<ScanLogEntry> first_log;

    parallel_for(trials, g.parallel, [&](std::uint64_t t) {
        Rng rng(derive_seed(g.seed, "readout-init", t));
        const auto chain = make_random_chain(chain_length, gen, rng);
        auto& row = rows[t];
        try {
            const auto found = initiate_characterization(chain, scan, model, rng);
            row.collision = found.collision_flagged;
            row.n_found = static_cast<int>(found.found_qubit_freqs.size());
            row.max_err = std::abs(found.found_nu_readout - chain.readout_ion.shift_hz);
            row.max_err = std::max(row.max_err, std::abs(found.found_nu0 - chain.nu0_hz));
            if (row.n_found == chain_length) {
                for (int k = 0; k < chain_length; ++k)
                    row.max_err = std::max(
                        row.max_err,
                        std::abs(found.found_qubit_freqs[static_cast<std::size_t>(k)] -
                                 chain.qubits[static_cast<std::size_t>(k)].shift_hz));
                row.recovered = row.max_err <= scan.resolution_hz / 2;
            }
            if (t == 0 && !scan_log_path.empty()) first_log = found.scan_log;
        } catch (const scan_error&) {
            row.failed = true;
        }
    });

    Table table("readout-init", g.seed,
                {"trial", "recovered", "n_found", "max_error_hz", "collision", "scan_failed"});
    std::uint64_t recovered = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        const auto& r = rows[t];
        if (r.recovered) ++recovered;
        table.add_row({static_cast<std::uint64_t>(t), r.recovered, r.n_found, r.max_err,
                       r.collision, r.failed});
    }
    table.add_comment("recovered=" + std::to_string(recovered) + "/" + std::to_string(trials));
    emit(table, g);

    if (!scan_log_path.empty()) {
        std::ofstream out(scan_log_path);
        if (!out) throw error("cannot open scan log path '" + scan_log_path + "'");
        out << "# " << kSchemaVersion << " command=readout-init.scan-log seed=" << g.seed
            << "\n";
        out << "step,laser,frequency_hz,pulse_applied,fluoresced\n";
        for (const auto& e : first_log)
            out << e.step << "," << e.laser << "," << format_double(e.frequency_hz) << ","
                << (e.pulse_applied ? 1 : 0) << "," << (e.fluoresced ? 1 : 0) << "\n";
    }
    return 0;
}

int cmd_stark(const json& cfg, const GlobalOpts& g) {
    const json sec = section(cfg, "stark");
    StarkParams params;
    params.coefficient_hz_per_v_cm = opt(sec, "coefficient_hz_per_v_cm", 35.0e3);
    Table table("stark", g.seed, {"field_v_per_cm", "shift_hz"});
    for (double field : opt_list(sec, "fields_v_per_cm", {0.0, 1.0, 1.0e6})) {
        params.field_v_per_cm = field;
        table.add_row({field, stark_shift(params)});
    }
    emit(table, g);
    return 0;
}

void report_error(const char* kind, const std::exception& e) {
    json err;
    err["error"]["type"] = kind;
    err["error"]["message"] = e.what();
    std::cerr << err.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rare-earth-ion quantum register simulator"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--config", g.config_path, "JSON config file");
    app.add_option("--seed", g.seed, "master seed");
    app.add_option("--trials", g.trials, "trial count override");
    app.add_option("--parallel", g.parallel, "worker threads");
    app.add_option("--out", g.out_path, "output path (default stdout)");
    app.add_option("--format", g.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    std::string scan_log_path;
    auto* gen_crystal = app.add_subcommand("gen-crystal", "generate and save a random crystal");
    auto* census = app.add_subcommand("census", "register census sweeps over random crystals");
    auto* stats = app.add_subcommand("stats", "analytic register-yield tables");
    auto* distill = app.add_subcommand("distill", "channel distillation Monte Carlo");
    std::string trace_path;
    distill->add_option("--trace", trace_path, "write a gate-level protocol trace for trial 0");
    auto* ent_rate = app.add_subcommand("ent-rate", "entanglement-rate bound on random states");
    auto* fmax = app.add_subcommand("f-max", "maximize the rate-bound profile function");
    auto* gate_bound = app.add_subcommand("gate-bound", "blockade-gate trajectory bound sweep");
    auto* budget = app.add_subcommand("readout-budget", "read-out ion photon budget");
    auto* init = app.add_subcommand("readout-init", "chain characterization Monte Carlo");
    init->add_option("--scan-log", scan_log_path, "write the first trial's scan log CSV");
    auto* stark = app.add_subcommand("stark", "Stark tuning table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        const std::runtime_error wrapped(std::string(e.get_name()) + ": " + e.what());
        report_error("config", wrapped);
        return 2;
    }

    try {
        json cfg = load_config(g.config_path);
        if (!scan_log_path.empty()) cfg["readout-init"]["scan_log"] = scan_log_path;
        if (!trace_path.empty()) cfg["distill"]["trace"] = trace_path;
        if (gen_crystal->parsed()) return cmd_gen_crystal(cfg, g);
        if (census->parsed()) return cmd_census(cfg, g);
        if (stats->parsed()) return cmd_stats(cfg, g);
        if (distill->parsed()) return cmd_distill(cfg, g);
        if (ent_rate->parsed()) return cmd_ent_rate(cfg, g);
        if (fmax->parsed()) return cmd_f_max(cfg, g);
        if (gate_bound->parsed()) return cmd_gate_bound(cfg, g);
        if (budget->parsed()) return cmd_readout_budget(cfg, g);
        if (init->parsed()) return cmd_readout_init(cfg, g);
        if (stark->parsed()) return cmd_stark(cfg, g);
        return 2;
    } catch (const parameter_error& e) {
        report_error("config", e);
        return 2;
    } catch (const plan_error& e) {
        report_error("config", e);
        return 2;
    } catch (const schema_error& e) {
        report_error("schema", e);
        return 2;
    } catch (const error& e) {
        report_error("model", e);
        return 3;
    } catch (const std::exception& e) {
        report_error("runtime", e);
        return 3;
    }
}
