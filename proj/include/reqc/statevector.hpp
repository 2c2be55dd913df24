#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "reqc/crystal.hpp"
#include "reqc/errors.hpp"
#include "reqc/rng.hpp"

namespace reqc {

using Complex = std::complex<double>;

/// Ordered level pair (from, to) of an optical transition.
struct Transition {
    Level from = Level::zero;
    Level to = Level::e;
};

inline constexpr Transition kZeroE{Level::zero, Level::e};
inline constexpr Transition kZeroOne{Level::zero, Level::one};

/// 2x2 complex matrix acting on a transition subspace, row-major.
using Mat2 = std::array<Complex, 4>;

/// R(theta, phi) = exp(-i theta/2 (cos phi sx + sin phi sy)) on the
/// ordered transition basis (from, to). This is the global-phase
/// convention for every pulse in the simulator.
inline Mat2 rotation_matrix(double theta, double phi) {
    const double c = std::cos(theta / 2);
    const double s = std::sin(theta / 2);
    const Complex mi(0.0, -1.0);
    return {Complex(c, 0.0), mi * s * std::exp(Complex(0.0, -phi)),
            mi * s * std::exp(Complex(0.0, phi)), Complex(c, 0.0)};
}

/// Exact two-level unitary for a resonant drive of Rabi rate omega
/// (rad/s) detuned by delta (rad/s), applied for tau seconds.
inline Mat2 detuned_matrix(double omega, double phi, double delta, double tau) {
    const double w = std::sqrt(delta * delta + omega * omega);
    const double theta = w * tau;
    const double c = std::cos(theta / 2);
    const double s = w > 0 ? std::sin(theta / 2) : 0.0;
    const double nx = w > 0 ? omega * std::cos(phi) / w : 0.0;
    const double ny = w > 0 ? omega * std::sin(phi) / w : 0.0;
    const double nz = w > 0 ? -delta / w : 0.0;
    const Complex global = std::exp(Complex(0.0, -delta * tau / 2));
    const Complex i(0.0, 1.0);
    return {global * (c - i * s * nz), global * (-i * s * Complex(nx, -ny)),
            global * (-i * s * Complex(nx, ny)), global * (c + i * s * nz)};
}

/// Which ions blockade each other, with coupling strengths in Hz.
/// Built from a CouplingGraph or assembled directly; only pairs above
/// the threshold belong here.
class BlockadeContext {
public:
    BlockadeContext() = default;

    static BlockadeContext from_graph(const CouplingGraph& graph) {
        BlockadeContext ctx;
        for (const auto& e : graph.edges()) ctx.add_pair(e.a, e.b, e.g_hz);
        return ctx;
    }

    static BlockadeContext star(int hub, const std::vector<int>& leaves, double g_hz) {
        BlockadeContext ctx;
        for (int leaf : leaves) ctx.add_pair(hub, leaf, g_hz);
        return ctx;
    }

    void add_pair(int a, int b, double g_hz) {
        partners_[a].push_back({b, g_hz});
        partners_[b].push_back({a, g_hz});
    }

    const std::vector<std::pair<int, double>>* partners_of(int id) const {
        auto it = partners_.find(id);
        return it == partners_.end() ? nullptr : &it->second;
    }

    bool coupled(int a, int b) const {
        if (const auto* p = partners_of(a))
            for (const auto& [nb, g] : *p)
                if (nb == b) return true;
        return false;
    }

private:
    std::unordered_map<int, std::vector<std::pair<int, double>>> partners_;
};

enum class PulseMode { ideal_blockade, detuned };

struct PulseOp {
    int target = 0;
    Transition transition = kZeroE;
    double area = 0;    // radians
    double phase = 0;   // radians
    PulseMode mode = PulseMode::ideal_blockade;
    double duration = 0; // seconds; required in detuned mode
};

/// Normalized amplitudes over the tensor product of 4-level ions.
/// Basis order: |0>,|1>,|aux>,|e> per ion, with the first ion in
/// `ion_ids` slowest-varying. Value semantics throughout.
class StateVector {
public:
    static constexpr int kMaxIons = 10;

    StateVector(std::vector<int> ion_ids, const std::vector<Level>& levels)
        : ids_(std::move(ion_ids)) {
        if (ids_.empty() || ids_.size() > kMaxIons)
            throw parameter_error("state vector supports 1.." + std::to_string(kMaxIons) +
                                  " ions");
        if (levels.size() != ids_.size())
            throw parameter_error("state vector: one initial level per ion required");
        for (std::size_t s = 0; s < ids_.size(); ++s) {
            if (!slot_.emplace(ids_[s], static_cast<int>(s)).second)
                throw parameter_error("state vector: duplicate ion id " +
                                      std::to_string(ids_[s]));
        }
        amp_.assign(std::size_t{1} << (2 * ids_.size()), Complex(0.0, 0.0));
        std::size_t idx = 0;
        for (std::size_t s = 0; s < ids_.size(); ++s)
            idx = idx * kLevels + static_cast<std::size_t>(levels[s]);
        amp_[idx] = 1.0;
    }

    static StateVector ground(std::vector<int> ion_ids) {
        const std::vector<Level> levels(ion_ids.size(), Level::zero);
        return StateVector(std::move(ion_ids), levels);
    }

    int num_ions() const { return static_cast<int>(ids_.size()); }
    std::size_t dim() const { return amp_.size(); }
    const std::vector<int>& ion_ids() const { return ids_; }

    int slot_of(int ion_id) const {
        auto it = slot_.find(ion_id);
        if (it == slot_.end())
            throw addressing_error("unknown ion id " + std::to_string(ion_id));
        return it->second;
    }

    std::size_t stride_of_slot(int slot) const {
        return std::size_t{1} << (2 * (num_ions() - 1 - slot));
    }

    Level level_at(std::size_t basis_index, int slot) const {
        return static_cast<Level>((basis_index / stride_of_slot(slot)) % kLevels);
    }

    Complex& amplitude(std::size_t basis_index) { return amp_[basis_index]; }
    const Complex& amplitude(std::size_t basis_index) const { return amp_[basis_index]; }

    /// Amplitude of the product basis state given per-ion levels (state order).
    const Complex& amplitude_of(const std::vector<Level>& levels) const {
        std::size_t idx = 0;
        for (std::size_t s = 0; s < ids_.size(); ++s)
            idx = idx * kLevels + static_cast<std::size_t>(levels[s]);
        return amp_[idx];
    }

    double norm() const {
        double sum = 0;
        for (const auto& a : amp_) sum += std::norm(a);
        return std::sqrt(sum);
    }

    void normalize() {
        const double n = norm();
        if (n <= 0) throw protocol_error("cannot normalize a zero state");
        for (auto& a : amp_) a /= n;
    }

    void check_normalized(double tol = 1e-9) const {
        if (std::abs(norm() - 1.0) > tol)
            throw protocol_error("state vector is not normalized");
    }

    /// Apply a 2x2 unitary on (transition.from, transition.to) of one ion,
    /// restricted to basis states accepted by `allowed` (which must not
    /// depend on the target ion's own level).
    template <typename Pred>
    void apply_two_level(int ion_id, Transition tr, const Mat2& u, Pred&& allowed) {
        if (tr.from == tr.to)
            throw parameter_error("pulse transition levels must be distinct");
        const int slot = slot_of(ion_id);
        const std::size_t stride = stride_of_slot(slot);
        const std::size_t la = static_cast<std::size_t>(tr.from);
        const std::size_t lb = static_cast<std::size_t>(tr.to);
        const std::size_t block = stride * kLevels;
        for (std::size_t high = 0; high < dim(); high += block)
            for (std::size_t low = 0; low < stride; ++low) {
                const std::size_t ia = high + la * stride + low;
                const std::size_t ib = high + lb * stride + low;
                if (!allowed(ia)) continue;
                const Complex va = amp_[ia];
                const Complex vb = amp_[ib];
                amp_[ia] = u[0] * va + u[1] * vb;
                amp_[ib] = u[2] * va + u[3] * vb;
            }
    }

    void apply_two_level(int ion_id, Transition tr, const Mat2& u) {
        apply_two_level(ion_id, tr, u, [](std::size_t) { return true; });
    }

    /// Multiply amplitudes with `ion` at `level` by exp(i phase).
    void apply_phase(int ion_id, Level level, double phase) {
        const int slot = slot_of(ion_id);
        const Complex f = std::exp(Complex(0.0, phase));
        for (std::size_t i = 0; i < dim(); ++i)
            if (level_at(i, slot) == level) amp_[i] *= f;
    }

    /// Exchange the two levels of `ion` (a classical relabeling).
    void swap_levels(int ion_id, Level la, Level lb) {
        const int slot = slot_of(ion_id);
        const std::size_t stride = stride_of_slot(slot);
        const std::size_t block = stride * kLevels;
        const std::size_t ka = static_cast<std::size_t>(la), kb = static_cast<std::size_t>(lb);
        for (std::size_t high = 0; high < dim(); high += block)
            for (std::size_t low = 0; low < stride; ++low)
                std::swap(amp_[high + ka * stride + low], amp_[high + kb * stride + low]);
    }

    double population(int ion_id, Level level) const {
        const int slot = slot_of(ion_id);
        double sum = 0;
        for (std::size_t i = 0; i < dim(); ++i)
            if (level_at(i, slot) == level) sum += std::norm(amp_[i]);
        return sum;
    }

    /// Project onto `ion` being at `level` and renormalize.
    /// Returns the Born probability of that outcome.
    double collapse_to_level(int ion_id, Level level) {
        const int slot = slot_of(ion_id);
        double p = 0;
        for (std::size_t i = 0; i < dim(); ++i) {
            if (level_at(i, slot) == level)
                p += std::norm(amp_[i]);
            else
                amp_[i] = 0.0;
        }
        if (p <= 0) throw protocol_error("projective collapse onto a zero-probability level");
        const double inv = 1.0 / std::sqrt(p);
        for (auto& a : amp_) a *= inv;
        return p;
    }

    /// Projective measurement of one ion in the level basis.
    Level measure_ion(int ion_id, Rng& rng) {
        const int slot = slot_of(ion_id);
        std::array<double, kLevels> p{};
        for (std::size_t i = 0; i < dim(); ++i)
            p[static_cast<std::size_t>(level_at(i, slot))] += std::norm(amp_[i]);
        double u = rng.uniform() * (p[0] + p[1] + p[2] + p[3]);
        int outcome = kLevels - 1;
        for (int l = 0; l < kLevels; ++l) {
            if (u < p[static_cast<std::size_t>(l)]) {
                outcome = l;
                break;
            }
            u -= p[static_cast<std::size_t>(l)];
        }
        collapse_to_level(ion_id, static_cast<Level>(outcome));
        return static_cast<Level>(outcome);
    }

    /// Projective reset: measure, then relabel the outcome to |0>.
    void reset_ion(int ion_id, Rng& rng) {
        const Level l = measure_ion(ion_id, rng);
        if (l != Level::zero) swap_levels(ion_id, l, Level::zero);
    }

private:
    std::vector<int> ids_;
    std::unordered_map<int, int> slot_;
    std::vector<Complex> amp_;
};

/// Diagnostic projector expectation; sums to 1 over the four levels.
inline double measure_population(const StateVector& state, int ion_id, Level level) {
    return state.population(ion_id, level);
}

/// Pulse on one ion. In ideal_blockade mode, the rotation acts only on
/// basis states where no coupled ion is excited; in detuned mode the
/// rotation is replaced by the exact two-level unitary with detuning
/// 2*pi*(sum of couplings to excited partners).
inline void apply_pulse(StateVector& state, const PulseOp& op, const BlockadeContext& ctx) {
    if (op.area < 0) throw parameter_error("pulse area must be non-negative");
    if (op.transition.from == op.transition.to)
        throw parameter_error("pulse transition levels must be distinct");
    const int slot = state.slot_of(op.target);
    const auto* partners = ctx.partners_of(op.target);

    if (op.mode == PulseMode::ideal_blockade) {
        const Mat2 u = rotation_matrix(op.area, op.phase);
        state.apply_two_level(op.target, op.transition, u, [&](std::size_t idx) {
            if (!partners) return true;
            for (const auto& [nb, g] : *partners)
                if (state.level_at(idx, state.slot_of(nb)) == Level::e) return false;
            return true;
        });
        return;
    }

    if (!(op.duration > 0))
        throw parameter_error("detuned pulse requires a positive duration");
    const double omega = op.area / op.duration;
    const std::size_t stride = state.stride_of_slot(slot);
    const std::size_t block = stride * kLevels;
    const std::size_t la = static_cast<std::size_t>(op.transition.from);
    const std::size_t lb = static_cast<std::size_t>(op.transition.to);
    for (std::size_t high = 0; high < state.dim(); high += block)
        for (std::size_t low = 0; low < stride; ++low) {
            const std::size_t ia = high + la * stride + low;
            const std::size_t ib = high + lb * stride + low;
            double delta = 0;
            if (partners)
                for (const auto& [nb, g] : *partners)
                    if (state.level_at(ia, state.slot_of(nb)) == Level::e)
                        delta += 2 * M_PI * g;
            const Mat2 u = detuned_matrix(omega, op.phase, delta, op.duration);
            const Complex va = state.amplitude(ia);
            const Complex vb = state.amplitude(ib);
            state.amplitude(ia) = u[0] * va + u[1] * vb;
            state.amplitude(ib) = u[2] * va + u[3] * vb;
        }
}

/// CNOT restricted to a transition pair of the target, conditioned on the
/// control ion occupying `control_level`. Self-inverse.
inline void apply_cnot(StateVector& state, int control_id, Level control_level, int target_id,
                       Transition tr) {
    if (control_id == target_id)
        throw parameter_error("cnot: control and target must differ");
    const int cslot = state.slot_of(control_id);
    const int tslot = state.slot_of(target_id);
    const std::size_t stride = state.stride_of_slot(tslot);
    const std::size_t block = stride * kLevels;
    const std::size_t la = static_cast<std::size_t>(tr.from);
    const std::size_t lb = static_cast<std::size_t>(tr.to);
    for (std::size_t high = 0; high < state.dim(); high += block)
        for (std::size_t low = 0; low < stride; ++low) {
            const std::size_t ia = high + la * stride + low;
            if (state.level_at(ia, cslot) != control_level) continue;
            const std::size_t ib = high + lb * stride + low;
            std::swap(state.amplitude(ia), state.amplitude(ib));
        }
}

/// Dipole-blockade controlled phase: pi (control 0<->e), 2pi (target
/// 0<->e), pi (control 0<->e), all blockade-conditioned. Equivalent to CZ
/// on the {|0>,|1>} qubit subspace up to a global phase.
inline void blockade_cz(StateVector& state, int control_id, int target_id,
                        const BlockadeContext& ctx) {
    if (!ctx.coupled(control_id, target_id))
        throw architecture_error("blockade_cz: ions " + std::to_string(control_id) + " and " +
                                 std::to_string(target_id) + " are not coupled");
    apply_pulse(state, {control_id, kZeroE, M_PI, 0.0, PulseMode::ideal_blockade, 0.0}, ctx);
    apply_pulse(state, {target_id, kZeroE, 2 * M_PI, 0.0, PulseMode::ideal_blockade, 0.0}, ctx);
    apply_pulse(state, {control_id, kZeroE, M_PI, 0.0, PulseMode::ideal_blockade, 0.0}, ctx);
}

/// Haar-random pure state over the given ions.
inline StateVector random_state(std::vector<int> ion_ids, Rng& rng) {
    StateVector state = StateVector::ground(std::move(ion_ids));
    double sum = 0;
    for (std::size_t i = 0; i < state.dim(); ++i) {
        state.amplitude(i) = Complex(rng.normal(), rng.normal());
        sum += std::norm(state.amplitude(i));
    }
    const double inv = 1.0 / std::sqrt(sum);
    for (std::size_t i = 0; i < state.dim(); ++i) state.amplitude(i) *= inv;
    return state;
}

}  // namespace reqc
