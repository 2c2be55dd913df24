#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "reqc/crystal.hpp"
#include "reqc/errors.hpp"
#include "reqc/rng.hpp"
#include "reqc/statevector.hpp"

namespace reqc {

/// Fluorescence and budget parameters of the designated read-out system.
/// Photon counting is modeled at the rate level: Poisson counts over an
/// observation window of one qubit excited-state lifetime, Bernoulli
/// trapping per emission cycle.
struct ReadoutModel {
    double emission_interval_s = 2.0e-7;      // seconds per emitted photon
    double detection_efficiency = 0.01;
    int photons_needed = 100;
    double qubit_e_lifetime_s = 2.0e-3;
    double trap_probability_per_cycle = 1e-6;
    double nu0_hz = 0;                        // readout resonance, adjacent qubit excited
    double homogeneous_linewidth_hz = 5.0e7;
    int detection_threshold = 50;             // photons for a "fluoresced" verdict
};

inline void validate(const ReadoutModel& m) {
    if (!(m.emission_interval_s > 0) || !(m.qubit_e_lifetime_s > 0) ||
        !(m.homogeneous_linewidth_hz > 0))
        throw parameter_error("readout model: times and linewidth must be positive");
    if (!(m.detection_efficiency > 0 && m.detection_efficiency <= 1))
        throw parameter_error("readout model: detection efficiency must lie in (0, 1]");
    if (m.photons_needed < 1 || m.detection_threshold < 1)
        throw parameter_error("readout model: photon counts must be positive");
    if (m.trap_probability_per_cycle < 0 || m.trap_probability_per_cycle > 1)
        throw parameter_error("readout model: trap probability must lie in [0, 1]");
}

/// Ce-like read-out system: 4f-5d emission cycle of ~20 ns, ~50 MHz
/// homogeneous width, and no hyperfine shelf to quench the fluorescence.
inline ReadoutModel ce_readout_preset() {
    ReadoutModel m;
    m.emission_interval_s = 2.0e-8;
    m.trap_probability_per_cycle = 0.0;
    m.homogeneous_linewidth_hz = 5.0e7;
    return m;
}

inline ReadoutModel readout_preset(const std::string& name) {
    if (name == "ce") return ce_readout_preset();
    if (name == "default" || name == "eu") return ReadoutModel{};
    throw parameter_error("unknown read-out preset '" + name + "'");
}

struct PhotonBudget {
    double required_emission_interval_s = 0; // to collect photons_needed per lifetime
    double emitted_photons = 0;              // photons_needed / detection_efficiency
    double max_trap_probability = 0;         // per cycle, for the success target
    std::uint64_t required_cycles = 0;       // ~ 1 / max_trap_probability
};

/// Rate arithmetic behind the read-out ion requirements: how fast it must
/// emit and how trap-free it must cycle for the readout to succeed with
/// probability success_target.
inline PhotonBudget photon_budget(const ReadoutModel& m, double success_target = 0.99) {
    validate(m);
    if (!(success_target > 0 && success_target < 1))
        throw parameter_error("photon_budget: success target must lie in (0, 1)");
    PhotonBudget b;
    b.required_emission_interval_s =
        m.qubit_e_lifetime_s * m.detection_efficiency / m.photons_needed;
    b.emitted_photons = m.photons_needed / m.detection_efficiency;
    b.max_trap_probability = 1.0 - std::pow(success_target, 1.0 / b.emitted_photons);
    b.required_cycles = static_cast<std::uint64_t>(std::llround(1.0 / b.max_trap_probability));
    return b;
}

/// Stark tuning: shift = coefficient * field, linear by construction.
struct StarkParams {
    double coefficient_hz_per_v_cm = 35.0e3; // Hz per (V/cm)
    double field_v_per_cm = 0;
};

inline double stark_shift(const StarkParams& p) {
    if (!(p.coefficient_hz_per_v_cm > 0))
        throw parameter_error("stark: coefficient must be positive");
    if (p.field_v_per_cm < 0) throw parameter_error("stark: field must be non-negative");
    return p.coefficient_hz_per_v_cm * p.field_v_per_cm;
}

/// Birthday bound for frequency reuse along a growing chain:
/// P(any two of n sequential channel draws coincide).
inline double collision_probability(int n_assigned, int usable_channels) {
    if (usable_channels < 1)
        throw parameter_error("collision_probability: need at least one channel");
    if (n_assigned < 0)
        throw parameter_error("collision_probability: negative chain length");
    if (n_assigned > usable_channels) return 1.0;
    double p_distinct = 1.0;
    for (int k = 0; k < n_assigned; ++k)
        p_distinct *= 1.0 - static_cast<double>(k) / usable_channels;
    return 1.0 - p_distinct;
}

/// Ground truth for a read-out chain: the designated read-out ion plus a
/// linear chain of qubit ions (index 0 is "qubit 1", adjacent to the
/// read-out ion). couplings_hz[0] couples the read-out ion to qubit 1,
/// couplings_hz[k] couples qubit k to qubit k+1. Frequencies are the
/// ions' shift_hz fields.
struct GroundTruthChain {
    Ion readout_ion;
    std::vector<Ion> qubits;
    std::vector<double> couplings_hz;
    double nu0_hz = 0; // readout resonance with qubit 1 excited

    int size() const { return static_cast<int>(qubits.size()); }
};

inline void validate(const GroundTruthChain& chain, double g_min_hz) {
    if (chain.couplings_hz.size() != chain.qubits.size())
        throw parameter_error("chain: need one coupling per adjacent pair");
    for (double g : chain.couplings_hz)
        if (!(g >= g_min_hz))
            throw parameter_error("chain: adjacency coupling below the blockade threshold");
}

struct ChainGenParams {
    double readout_freq_lo_hz = 0.0;
    double readout_freq_hi_hz = 2.0e9;
    double qubit_freq_lo_hz = 0.0;
    double qubit_freq_hi_hz = 2.0e9;
    double min_separation_hz = 2.0e8;  // pairwise qubit frequency spacing
    double coupling_lo_hz = 5.0e8;     // well above the homogeneous linewidth
    double coupling_hi_hz = 1.5e9;
};

inline GroundTruthChain make_random_chain(int n_qubits, const ChainGenParams& p, Rng& rng) {
    if (n_qubits < 1) throw parameter_error("make_random_chain: need at least one qubit");
    GroundTruthChain chain;
    chain.readout_ion.id = 0;
    chain.readout_ion.species = Species::readout;
    chain.readout_ion.dmu = 0.8e-31;
    chain.readout_ion.shift_hz = rng.uniform(p.readout_freq_lo_hz, p.readout_freq_hi_hz);
    std::vector<double> freqs;
    while (static_cast<int>(freqs.size()) < n_qubits) {
        const double f = rng.uniform(p.qubit_freq_lo_hz, p.qubit_freq_hi_hz);
        bool ok = true;
        for (double other : freqs)
            if (std::abs(other - f) < p.min_separation_hz) ok = false;
        if (ok) freqs.push_back(f);
    }
    for (int k = 0; k < n_qubits; ++k) {
        Ion q;
        q.id = k + 1;
        q.species = Species::qubit_dopant;
        q.dmu = 0.8e-31;
        q.shift_hz = freqs[static_cast<std::size_t>(k)];
        chain.qubits.push_back(q);
        chain.couplings_hz.push_back(rng.uniform(p.coupling_lo_hz, p.coupling_hi_hz));
    }
    chain.nu0_hz = chain.readout_ion.shift_hz + chain.couplings_hz[0];
    return chain;
}

struct FluorescenceObservation {
    bool fluoresced = false;
    long photons_detected = 0;
    bool trapped = false;
};

namespace detail {

/// Photon statistics of one observation window (one qubit lifetime) on a
/// resonant, untrapped read-out ion.
inline FluorescenceObservation observe_window(const ReadoutModel& m, bool resonant, Rng& rng) {
    FluorescenceObservation obs;
    if (!resonant) return obs;
    const long cycles = std::lround(m.qubit_e_lifetime_s / m.emission_interval_s);
    long effective = cycles;
    if (m.trap_probability_per_cycle > 0) {
        double u;
        do {
            u = rng.uniform();
        } while (u <= 0.0);
        const long first_trap = static_cast<long>(
            std::floor(std::log(u) / std::log1p(-m.trap_probability_per_cycle))) + 1;
        if (first_trap <= cycles) {
            obs.trapped = true;
            effective = first_trap;
        }
    }
    obs.photons_detected = rng.poisson(effective * m.detection_efficiency);
    obs.fluoresced = obs.photons_detected >= m.detection_threshold;
    return obs;
}

}  // namespace detail

/// Classical single-instance physics of a chain: definite levels, dipole
/// shifts of transition lines by excited neighbors, stochastic pulses and
/// photon counting. All protocol simulations run against this model.
class ChainPhysics {
public:
    ChainPhysics(const GroundTruthChain& chain, const ReadoutModel& model)
        : chain_(chain), model_(model), levels_(chain.qubits.size(), Level::zero) {}

    void reset_ground() {
        std::fill(levels_.begin(), levels_.end(), Level::zero);
    }

    Level level(int qubit_index_1based) const {
        return levels_[static_cast<std::size_t>(qubit_index_1based - 1)];
    }
    void set_level(int qubit_index_1based, Level l) {
        levels_[static_cast<std::size_t>(qubit_index_1based - 1)] = l;
    }
    bool trapped() const { return trapped_; }

    /// Current transition frequency of qubit k (0-based): the bare line
    /// shifted by the coupling to any excited adjacent qubit. The
    /// read-out ion's own excitation is averaged out (it cycles fast).
    double qubit_transition_hz(std::size_t k) const {
        double f = chain_.qubits[k].shift_hz;
        if (k > 0 && levels_[k - 1] == Level::e) f += chain_.couplings_hz[k];
        if (k + 1 < levels_.size() && levels_[k + 1] == Level::e)
            f += chain_.couplings_hz[k + 1];
        return f;
    }

    double readout_resonance_hz() const {
        double f = chain_.readout_ion.shift_hz;
        if (!levels_.empty() && levels_[0] == Level::e) f += chain_.couplings_hz[0];
        return f;
    }

    /// One qubit-laser pi pulse: every qubit whose current line lies
    /// within half a linewidth toggles |0> <-> |e>, each independently
    /// succeeding with the given fidelity (silent failure otherwise).
    void pi_pulse(double laser_hz, double fidelity, Rng& rng) {
        std::vector<std::size_t> resonant;
        for (std::size_t k = 0; k < levels_.size(); ++k) {
            if (std::abs(laser_hz - qubit_transition_hz(k)) >
                model_.homogeneous_linewidth_hz / 2)
                continue;
            if (levels_[k] == Level::zero || levels_[k] == Level::e) resonant.push_back(k);
        }
        for (std::size_t k : resonant) {
            if (!rng.bernoulli(fidelity)) continue;
            levels_[k] = levels_[k] == Level::zero ? Level::e : Level::zero;
        }
    }

    /// Readout-laser observation window at the given frequency.
    FluorescenceObservation observe(double readout_laser_hz, Rng& rng) {
        if (trapped_) return {};
        const bool resonant = std::abs(readout_laser_hz - readout_resonance_hz()) <=
                              model_.homogeneous_linewidth_hz / 2;
        auto obs = detail::observe_window(model_, resonant, rng);
        if (obs.trapped) trapped_ = true;
        return obs;
    }

private:
    const GroundTruthChain& chain_;
    const ReadoutModel& model_;
    std::vector<Level> levels_;
    bool trapped_ = false;
};

/// Fluorescence readout of qubit 1: a pi pulse on its 0<->e transition,
/// then the readout laser at nu0. Fluorescence means the qubit was in
/// |0>. Higher chain indices must be routed through transfer_state first.
inline FluorescenceObservation readout_qubit(const GroundTruthChain& chain, int qubit_index,
                                             Level state_of_qubit, const ReadoutModel& model,
                                             Rng& rng) {
    validate(model);
    if (qubit_index != 1)
        throw routing_error("readout addresses qubit 1 only; transfer higher qubits first");
    if (chain.qubits.empty()) throw parameter_error("readout_qubit: empty chain");

    ChainPhysics phys(chain, model);
    phys.set_level(1, state_of_qubit);
    phys.pi_pulse(chain.qubits[0].shift_hz, 1.0, rng);
    return phys.observe(chain.nu0_hz, rng);
}

enum class ChainStepKind { pump_to_zero, cnot };

struct ChainStep {
    ChainStepKind kind = ChainStepKind::pump_to_zero;
    int target_index = 0;  // 1-based qubit index
    int control_index = 0; // cnot only
};

/// Step sequence that moves qubit `from_index`'s logical value onto its
/// lower neighbor: pump the neighbor into |0>, then CNOT with the upper
/// qubit as control. Consecutive transfers walk a register out through
/// qubit 1.
inline std::vector<ChainStep> transfer_state(const GroundTruthChain& chain, int from_index,
                                             int to_index) {
    if (from_index < 2 || from_index > chain.size())
        throw routing_error("transfer_state: source index outside the chain");
    if (to_index != from_index - 1)
        throw routing_error("transfer_state: target must be the adjacent lower qubit");
    return {{ChainStepKind::pump_to_zero, to_index, 0},
            {ChainStepKind::cnot, to_index, from_index}};
}

/// Execute transfer steps on the state-vector engine. Qubit index k maps
/// to the ion id of chain.qubits[k-1].
inline void execute_chain_steps(StateVector& state, const GroundTruthChain& chain,
                                const std::vector<ChainStep>& steps, Rng& rng) {
    auto ion_id = [&](int index) { return chain.qubits[static_cast<std::size_t>(index - 1)].id; };
    for (const auto& step : steps) {
        switch (step.kind) {
            case ChainStepKind::pump_to_zero:
                state.reset_ion(ion_id(step.target_index), rng);
                break;
            case ChainStepKind::cnot:
                apply_cnot(state, ion_id(step.control_index), Level::one,
                           ion_id(step.target_index), kZeroOne);
                break;
        }
    }
}

struct ScanParams {
    double resolution_hz = 1.0e7;
    double pi_pulse_fidelity = 1.0;
    int probe_repeats = 3; // majority vote per grid point
    double readout_scan_lo_hz = 0.0;
    double readout_scan_hi_hz = 2.0e9;
    double qubit_scan_lo_hz = 0.0;
    double qubit_scan_hi_hz = 2.0e9;
    int max_chain_length = 8;
};

struct ScanLogEntry {
    int step = 0;
    char laser = 'r'; // 'r' readout laser, 'q' qubit laser
    double frequency_hz = 0;
    bool pulse_applied = false;
    bool fluoresced = false;
};

struct DiscoveredChain {
    double found_nu_readout = 0;
    double found_nu0 = 0;
    std::vector<double> found_qubit_freqs;
    std::vector<ScanLogEntry> scan_log;
    bool collision_flagged = false;
};

namespace detail {

struct Band {
    std::size_t first = 0, last = 0;
    std::size_t width() const { return last - first + 1; }
};

/// Contiguous runs of `target` responses, ignoring single-point noise.
inline std::vector<Band> contrast_bands(const std::vector<bool>& response, bool target,
                                        std::size_t min_width) {
    std::vector<Band> bands;
    std::size_t i = 0;
    while (i < response.size()) {
        if (response[i] != target) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < response.size() && response[j + 1] == target) ++j;
        if (j - i + 1 >= min_width) bands.push_back({i, j});
        i = j + 1;
    }
    return bands;
}

}  // namespace detail

/// Full chain-characterization protocol against a ground-truth chain:
/// scan the readout laser for the read-out ion, find qubit 1 as the
/// frequency whose pi pulse stops the fluorescence, establish nu0 with
/// qubit 1 excited, then walk outward, each new qubit betrayed by its
/// blockade of the relay pulse chain. Every observation lands in the
/// scan log. Frequencies are recovered to within half a scan step when
/// the pi pulses cooperate.
inline DiscoveredChain initiate_characterization(const GroundTruthChain& chain,
                                                 const ScanParams& scan,
                                                 const ReadoutModel& model, Rng& rng) {
    validate(model);
    if (!(scan.resolution_hz > 0))
        throw parameter_error("characterization: resolution must be positive");
    if (scan.resolution_hz > model.homogeneous_linewidth_hz)
        throw parameter_error("characterization: resolution coarser than the linewidth");
    if (!(scan.pi_pulse_fidelity > 0 && scan.pi_pulse_fidelity <= 1))
        throw parameter_error("characterization: fidelity must lie in (0, 1]");

    ChainPhysics phys(chain, model);
    DiscoveredChain found;
    int step_counter = 0;

    const std::size_t response_points =
        static_cast<std::size_t>(model.homogeneous_linewidth_hz / scan.resolution_hz) + 1;
    const std::size_t min_band = 2;

    auto majority_probe = [&](char laser, double log_freq, bool pulsed, auto&& once) {
        int yes = 0;
        for (int rep = 0; rep < scan.probe_repeats; ++rep) {
            phys.reset_ground();
            const FluorescenceObservation obs = once();
            found.scan_log.push_back({step_counter++, laser, log_freq, pulsed, obs.fluoresced});
            if (obs.fluoresced) ++yes;
        }
        return 2 * yes > scan.probe_repeats;
    };

    auto grid = [&](double lo, double hi) {
        std::vector<double> freqs;
        for (double f = lo; f <= hi; f += scan.resolution_hz) freqs.push_back(f);
        return freqs;
    };

    auto band_center = [&](const std::vector<double>& freqs, const detail::Band& band) {
        return (freqs[band.first] + freqs[band.last]) / 2;
    };

    // readout laser scan: fluorescence marks the read-out ion
    const auto rfreqs = grid(scan.readout_scan_lo_hz, scan.readout_scan_hi_hz);
    std::vector<bool> response;
    response.reserve(rfreqs.size());
    for (double f : rfreqs)
        response.push_back(
            majority_probe('r', f, false, [&] { return phys.observe(f, rng); }));
    auto bands = detail::contrast_bands(response, true, min_band);
    if (bands.empty())
        throw scan_error("readout scan exhausted: no fluorescing read-out ion in range");
    std::sort(bands.begin(), bands.end(),
              [](const auto& a, const auto& b) { return a.width() > b.width(); });
    if (bands.size() > 1 && bands[1].width() >= response_points / 2)
        found.collision_flagged = true;
    found.found_nu_readout = band_center(rfreqs, bands[0]);

    const auto qfreqs = grid(scan.qubit_scan_lo_hz, scan.qubit_scan_hi_hz);

    // qubit scans, extending along the chain until a scan stays flat
    for (int k = 1; k <= scan.max_chain_length; ++k) {
        response.assign(qfreqs.size(), false);
        std::vector<bool> skipped(qfreqs.size(), false);
        const double observe_at = k == 1 ? found.found_nu_readout : found.found_nu0;
        // mask the already-found lines: a relay pulse would toggle them
        const double skip_margin =
            model.homogeneous_linewidth_hz / 2 + scan.resolution_hz;
        for (std::size_t i = 0; i < qfreqs.size(); ++i) {
            const double f = qfreqs[i];
            bool skip = false;
            for (double known : found.found_qubit_freqs)
                if (std::abs(f - known) <= skip_margin) skip = true;
            if (skip) {
                skipped[i] = true;
                continue;
            }
            response[i] = majority_probe('q', f, true, [&] {
                phys.pi_pulse(f, scan.pi_pulse_fidelity, rng);
                // relay: probe down the known part of the chain
                for (int j = k - 1; j >= 1; --j)
                    phys.pi_pulse(found.found_qubit_freqs[static_cast<std::size_t>(j - 1)],
                                  scan.pi_pulse_fidelity, rng);
                return phys.observe(observe_at, rng);
            });
        }
        // majority response over non-skipped points defines the baseline
        std::size_t trues = 0, total = 0;
        for (std::size_t i = 0; i < qfreqs.size(); ++i) {
            if (skipped[i]) continue;
            ++total;
            if (response[i]) ++trues;
        }
        if (total == 0) break;
        const bool baseline = 2 * trues > total;
        // mark skipped points as baseline so they cannot form bands
        for (std::size_t i = 0; i < qfreqs.size(); ++i)
            if (skipped[i]) response[i] = baseline;
        auto qbands = detail::contrast_bands(response, !baseline, min_band);
        if (qbands.empty()) {
            if (k == 1)
                throw scan_error("qubit scan exhausted: no qubit controls the read-out ion");
            break; // end of the chain
        }
        std::sort(qbands.begin(), qbands.end(),
                  [](const auto& a, const auto& b) { return a.width() > b.width(); });
        if (qbands.size() > 1 && qbands[1].width() >= response_points / 2)
            found.collision_flagged = true;
        if (qbands[0].width() > 2 * response_points) found.collision_flagged = true;
        found.found_qubit_freqs.push_back(band_center(qfreqs, qbands[0]));

        if (k == 1) {
            // nu0: readout resonance with qubit 1 held excited
            std::vector<bool> r0;
            r0.reserve(rfreqs.size());
            for (double f : rfreqs)
                r0.push_back(majority_probe('r', f, true, [&] {
                    phys.pi_pulse(found.found_qubit_freqs[0], scan.pi_pulse_fidelity, rng);
                    return phys.observe(f, rng);
                }));
            auto nbands = detail::contrast_bands(r0, true, min_band);
            if (nbands.empty())
                throw scan_error("nu0 scan exhausted: shifted readout resonance not found");
            std::sort(nbands.begin(), nbands.end(),
                      [](const auto& a, const auto& b) { return a.width() > b.width(); });
            found.found_nu0 = band_center(rfreqs, nbands[0]);
        }
    }
    // lines closer than a linewidth cannot be addressed individually
    for (std::size_t i = 0; i < found.found_qubit_freqs.size(); ++i)
        for (std::size_t j = i + 1; j < found.found_qubit_freqs.size(); ++j)
            if (std::abs(found.found_qubit_freqs[i] - found.found_qubit_freqs[j]) <=
                model.homogeneous_linewidth_hz)
                found.collision_flagged = true;
    return found;
}

}  // namespace reqc
