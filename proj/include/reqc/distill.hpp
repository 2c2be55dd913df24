#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "reqc/errors.hpp"
#include "reqc/rng.hpp"
#include "reqc/statevector.hpp"

namespace reqc {

/// One primitive of the distillation gate sequence.
struct GateOp {
    enum class Kind { rotation, phase, cnot };
    Kind kind = Kind::rotation;
    int ion = 0;
    Transition transition = kZeroE;
    double area = 0;
    double phase = 0;
    bool blockaded = true;
    int control = 0;
    Level control_level = Level::one;

    static GateOp rotation(int ion, Transition tr, double area, double phase,
                           bool blockaded = true) {
        GateOp op;
        op.kind = Kind::rotation;
        op.ion = ion;
        op.transition = tr;
        op.area = area;
        op.phase = phase;
        op.blockaded = blockaded;
        return op;
    }
    static GateOp level_phase(int ion, Level level, double phase) {
        GateOp op;
        op.kind = Kind::phase;
        op.ion = ion;
        op.transition = {level, level == Level::zero ? Level::one : Level::zero};
        op.phase = phase;
        return op;
    }
    static GateOp cnot(int control, Level control_level, int target, Transition tr) {
        GateOp op;
        op.kind = Kind::cnot;
        op.control = control;
        op.control_level = control_level;
        op.ion = target;
        op.transition = tr;
        return op;
    }
};

namespace detail {

inline void apply_gate(StateVector& state, const GateOp& op, const BlockadeContext& ctx,
                       bool inverted) {
    switch (op.kind) {
        case GateOp::Kind::rotation: {
            const Mat2 u = rotation_matrix(inverted ? -op.area : op.area, op.phase);
            if (op.blockaded) {
                const auto* partners = ctx.partners_of(op.ion);
                state.apply_two_level(op.ion, op.transition, u, [&](std::size_t idx) {
                    if (!partners) return true;
                    for (const auto& [nb, g] : *partners)
                        if (state.level_at(idx, state.slot_of(nb)) == Level::e) return false;
                    return true;
                });
            } else {
                state.apply_two_level(op.ion, op.transition, u);
            }
            break;
        }
        case GateOp::Kind::phase:
            state.apply_phase(op.ion, op.transition.from, inverted ? -op.phase : op.phase);
            break;
        case GateOp::Kind::cnot:
            apply_cnot(state, op.control, op.control_level, op.ion, op.transition);
            break;
    }
}

}  // namespace detail

inline void apply_ops(StateVector& state, const std::vector<GateOp>& ops,
                      const BlockadeContext& ctx) {
    for (const auto& op : ops) detail::apply_gate(state, op, ctx, false);
}

inline void apply_ops_inverse(StateVector& state, const std::vector<GateOp>& ops,
                              const BlockadeContext& ctx) {
    for (auto it = ops.rbegin(); it != ops.rend(); ++it)
        detail::apply_gate(state, *it, ctx, true);
}

/// Steps 1-3 of a distillation round: bus superposition, conditional
/// phase accumulation through the blockaded excited-state transfers, and
/// the pi/2 rotation about the azimuth (alpha + pi/2) axis. Leaves the
/// bus with amplitudes (sin((n-1)a/2), cos((n-1)a/2)) on (|0>,|1>) up to
/// a global phase, n being the number of coupled channel ions in |0>.
inline std::vector<GateOp> distill_phase_ops(int bus_id, const std::vector<int>& channel_ids,
                                             double alpha) {
    std::vector<GateOp> ops;
    ops.push_back(GateOp::rotation(bus_id, kZeroOne, M_PI / 2, M_PI / 2));
    ops.push_back(GateOp::rotation(bus_id, kZeroE, M_PI, 0.0));
    // per-ion down/up transfer pair; offsetting the return field by
    // pi - alpha makes the net conditional phase on an unblockaded ion
    // exactly exp(i alpha)
    for (int id : channel_ids) ops.push_back(GateOp::rotation(id, kZeroE, M_PI, 0.0));
    for (int id : channel_ids) ops.push_back(GateOp::rotation(id, kZeroE, M_PI, M_PI - alpha));
    ops.push_back(GateOp::rotation(bus_id, kZeroE, M_PI, M_PI));
    // pi/2 rotation about the equatorial axis at azimuth alpha + pi/2,
    // realized as a frame phase followed by an x-axis pulse so that the
    // measurement-basis amplitudes come out real
    ops.push_back(GateOp::level_phase(bus_id, Level::one, -(alpha + M_PI / 2)));
    ops.push_back(GateOp::rotation(bus_id, kZeroOne, M_PI / 2, 0.0));
    return ops;
}

/// Steps 1-4: phase accumulation plus the tagging CNOT that moves
/// channel ions out of |0> on the protected (bus |1>) branch.
inline std::vector<GateOp> distill_premeasurement_ops(int bus_id,
                                                      const std::vector<int>& channel_ids,
                                                      double alpha) {
    auto ops = distill_phase_ops(bus_id, channel_ids, alpha);
    for (int id : channel_ids)
        ops.push_back(GateOp::cnot(bus_id, Level::one, id, kZeroOne));
    return ops;
}

/// The fully unitary round: steps 1-4, the weak excitation transfer of
/// amplitude sqrt(beta) on every channel ion, and the inverse CNOT.
/// Excludes the decay sampling and bus reset, which are not unitary.
inline std::vector<GateOp> distill_coherent_ops(int bus_id, const std::vector<int>& channel_ids,
                                                double alpha, double beta) {
    auto ops = distill_premeasurement_ops(bus_id, channel_ids, alpha);
    const double transfer_area = 2 * std::asin(std::sqrt(beta));
    for (int id : channel_ids)
        ops.push_back(GateOp::rotation(id, kZeroE, transfer_area, 0.0));
    for (int id : channel_ids)
        ops.push_back(GateOp::cnot(bus_id, Level::one, id, kZeroOne));
    return ops;
}

struct RoundResult {
    int decays = 0;
    bool tagged = false;
};

/// One distillation round. The decay step is unraveled by measuring the
/// bus branch after the tagging CNOT: the bus is projectively reset at
/// the end of every round either way, so this yields the same statistics
/// as emission-by-emission sampling while making "tagged round" well
/// defined. On a tagged round every exposed channel ion decays
/// independently with probability beta and branches to |aux> (removal)
/// with probability branch_to_aux, else back to |0>.
inline RoundResult distill_round(StateVector& state, int bus_id,
                                 const std::vector<int>& channel_ids, double alpha, double beta,
                                 double branch_to_aux, Rng& rng) {
    if (!(beta >= 0 && beta < 1))
        throw parameter_error("distill_round: beta must lie in [0, 1)");
    if (!(branch_to_aux >= 0 && branch_to_aux <= 1))
        throw parameter_error("distill_round: branch_to_aux must lie in [0, 1]");

    constexpr double tol = 1e-9;
    if (state.population(bus_id, Level::zero) < 1 - tol)
        throw protocol_error("distill_round: bus ion must start in |0>");
    std::vector<int> active;
    for (int id : channel_ids) {
        const double p0 = state.population(id, Level::zero);
        const double paux = state.population(id, Level::aux);
        if (p0 > 1 - tol)
            active.push_back(id);
        else if (!(paux > 1 - tol))
            throw protocol_error("distill_round: channel ion " + std::to_string(id) +
                                 " must start in |0> (or be parked in |aux>)");
    }

    const BlockadeContext ctx = BlockadeContext::star(bus_id, channel_ids, 1.0);
    apply_ops(state, distill_premeasurement_ops(bus_id, active, alpha), ctx);

    RoundResult result;
    const Level branch = state.measure_ion(bus_id, rng);
    if (branch == Level::zero) {
        // tagged: channel ions sit in |0> facing the decay transfer
        result.tagged = true;
        for (int id : active) {
            if (!rng.bernoulli(beta)) continue;
            ++result.decays;
            if (rng.bernoulli(branch_to_aux)) state.swap_levels(id, Level::zero, Level::aux);
        }
    } else if (branch == Level::one) {
        // protected branch: undo the tagging flips, then reset the bus
        for (int id : active) apply_cnot(state, bus_id, Level::one, id, kZeroOne);
        state.swap_levels(bus_id, Level::one, Level::zero);
    } else {
        throw protocol_error("distill_round: bus left the qubit subspace");
    }
    return result;
}

inline std::vector<double> default_alpha_schedule() {
    const double golden = (1 + std::sqrt(5.0)) / 2;
    return {M_PI, 2 * M_PI / 3, 2 * M_PI / 5, 2 * M_PI * (1 - 1 / golden)};
}

struct DistillConfig {
    std::vector<double> alpha_schedule = default_alpha_schedule();
    double beta = 0.05;          // per-ion decay probability per tagged round
    double branch_to_aux = 1.0;  // branching ratio of the decay into |aux>
    int max_rounds = 1000;
    std::uint64_t seed = 0;
};

inline void validate(const DistillConfig& c) {
    if (!(c.beta > 0 && c.beta < 1))
        throw parameter_error("distill config: beta must lie in (0, 1)");
    if (c.alpha_schedule.empty())
        throw parameter_error("distill config: alpha schedule must not be empty");
    for (double a : c.alpha_schedule)
        if (!(a > 0 && a < 2 * M_PI))
            throw parameter_error("distill config: alpha values must lie in (0, 2 pi)");
    if (!(c.branch_to_aux >= 0 && c.branch_to_aux <= 1))
        throw parameter_error("distill config: branch_to_aux must lie in [0, 1]");
    if (c.max_rounds < 1) throw parameter_error("distill config: max_rounds must be positive");
}

struct DistillOutcome {
    int final_occupancy = 0;
    int rounds_used = 0;
    std::vector<int> per_round_decays;
    std::vector<bool> per_round_tagged;
    bool timed_out = false;
};

/// Per-round view handed to a trace observer.
struct RoundTrace {
    int round = 0;
    double alpha = 0;
    std::vector<int> active_channels;
    RoundResult result;
};

using DistillObserver = std::function<void(const RoundTrace&)>;

/// One-line description of a gate op, for protocol traces.
inline std::string describe(const GateOp& op) {
    auto level_name = [](Level l) {
        switch (l) {
            case Level::zero: return "0";
            case Level::one: return "1";
            case Level::aux: return "aux";
            case Level::e: return "e";
        }
        return "?";
    };
    char buf[160];
    switch (op.kind) {
        case GateOp::Kind::rotation:
            std::snprintf(buf, sizeof buf,
                          "rotation ion=%d %s<->%s area=%.6f phase=%.6f%s", op.ion,
                          level_name(op.transition.from), level_name(op.transition.to),
                          op.area, op.phase, op.blockaded ? " blockaded" : "");
            break;
        case GateOp::Kind::phase:
            std::snprintf(buf, sizeof buf, "phase ion=%d level=%s phi=%.6f", op.ion,
                          level_name(op.transition.from), op.phase);
            break;
        case GateOp::Kind::cnot:
            std::snprintf(buf, sizeof buf, "cnot control=%d@%s target=%d %s<->%s", op.control,
                          level_name(op.control_level), op.ion,
                          level_name(op.transition.from), level_name(op.transition.to));
            break;
    }
    return buf;
}

inline int channel_occupancy(const StateVector& state, const std::vector<int>& channel_ids) {
    int occ = 0;
    for (int id : channel_ids)
        if (state.population(id, Level::aux) < 0.5) ++occ;
    return occ;
}

/// Repeat distillation rounds, cycling the alpha schedule, until the
/// channel holds at most one ion and a full schedule pass produced no
/// tagging events (a single quiet round can be an alpha/n coincidence).
/// An emptied channel is absorbing and terminates immediately.
inline DistillOutcome distill_until_single(int n_initial, const DistillConfig& config,
                                           const DistillObserver& observer = {}) {
    if (n_initial < 0) throw parameter_error("distill: n_initial must be non-negative");
    validate(config);

    const int bus_id = 0;
    std::vector<int> channel_ids;
    for (int i = 1; i <= n_initial; ++i) channel_ids.push_back(i);

    std::vector<int> all_ids = channel_ids;
    all_ids.insert(all_ids.begin(), bus_id);
    StateVector state = StateVector::ground(all_ids);
    Rng rng(config.seed);

    DistillOutcome outcome;
    const int pass = static_cast<int>(config.alpha_schedule.size());
    int quiet_streak = 0;
    int occ = channel_occupancy(state, channel_ids);
    while (outcome.rounds_used < config.max_rounds) {
        if (occ == 0) break;
        if (occ == 1 && quiet_streak >= pass) break;
        const double alpha =
            config.alpha_schedule[static_cast<std::size_t>(outcome.rounds_used) %
                                  config.alpha_schedule.size()];
        std::vector<int> active;
        if (observer)
            for (int id : channel_ids)
                if (state.population(id, Level::aux) < 0.5) active.push_back(id);
        const RoundResult rr =
            distill_round(state, bus_id, channel_ids, alpha, config.beta,
                          config.branch_to_aux, rng);
        if (observer) observer({outcome.rounds_used, alpha, std::move(active), rr});
        outcome.per_round_decays.push_back(rr.decays);
        outcome.per_round_tagged.push_back(rr.tagged);
        ++outcome.rounds_used;
        quiet_streak = rr.tagged ? 0 : quiet_streak + 1;
        if (rr.decays > 0) occ = channel_occupancy(state, channel_ids);
    }
    outcome.final_occupancy = occ;
    outcome.timed_out = outcome.rounds_used >= config.max_rounds && occ > 1;
    return outcome;
}

}  // namespace reqc
