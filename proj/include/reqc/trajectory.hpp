#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "reqc/entanglement.hpp"
#include "reqc/errors.hpp"
#include "reqc/statevector.hpp"

namespace reqc {

/// One piecewise-constant control: resonant-frame Rabi drive on a
/// transition of one ion, with optional static detuning. Rates in rad/s.
struct Drive {
    int ion = 0;
    Transition transition = kZeroE;
    double rabi = 0;
    double phase = 0;
    double detuning = 0;
};

struct PulseSegment {
    double duration = 0; // seconds
    std::vector<Drive> drives;
};

/// Time series of a gate run: states plus derived P_e(t), E(t) and the
/// running trapezoidal integral of P_e.
struct Trajectory {
    std::vector<double> times;
    std::vector<StateVector> states;
    std::vector<double> p_e;
    std::vector<double> entropy_bits;
    std::vector<double> integral_p_e;
    double g = 0;
    double max_norm_drift = 0;
};

namespace detail {

/// Control Hamiltonian of one segment plus the dipole coupling term
/// g|ee><ee|, in the state's basis indexing. Units: rad/s.
inline Eigen::MatrixXcd segment_hamiltonian(const StateVector& state,
                                            const PulseSegment& segment, double g) {
    const auto dim = static_cast<Eigen::Index>(state.dim());
    Eigen::MatrixXcd h(dim, dim);
    h.setZero();
    for (const auto& drive : segment.drives) {
        const int slot = state.slot_of(drive.ion);
        const std::size_t stride = state.stride_of_slot(slot);
        const std::size_t block = stride * kLevels;
        const std::size_t la = static_cast<std::size_t>(drive.transition.from);
        const std::size_t lb = static_cast<std::size_t>(drive.transition.to);
        const Complex half_rabi =
            0.5 * drive.rabi * std::exp(Complex(0.0, drive.phase));
        for (std::size_t high = 0; high < state.dim(); high += block)
            for (std::size_t low = 0; low < stride; ++low) {
                const auto ia = static_cast<Eigen::Index>(high + la * stride + low);
                const auto ib = static_cast<Eigen::Index>(high + lb * stride + low);
                h(ib, ia) += half_rabi;
                h(ia, ib) += std::conj(half_rabi);
                h(ib, ib) += drive.detuning;
            }
    }
    if (state.num_ions() == 2) {
        const std::size_t ee = static_cast<std::size_t>(Level::e) * kLevels +
                               static_cast<std::size_t>(Level::e);
        h(static_cast<Eigen::Index>(ee), static_cast<Eigen::Index>(ee)) += g;
    } else {
        throw parameter_error("gate trajectories are defined for two-ion states");
    }
    return h;
}

}  // namespace detail

/// Integrate i d/dt psi = H(t) psi with a fixed-step fourth-order
/// Runge-Kutta scheme, H(t) piecewise constant over the pulse plan plus
/// the always-on coupling g|ee><ee|. The state is never renormalized;
/// norm drift beyond 1e-6 aborts with a step-size error.
inline Trajectory simulate_gate_trajectory(const StateVector& initial,
                                           const std::vector<PulseSegment>& plan, double g,
                                           double dt) {
    if (!(dt > 0)) throw parameter_error("simulate_gate_trajectory: dt must be positive");
    initial.check_normalized(1e-9);
    if (initial.num_ions() != 2)
        throw parameter_error("simulate_gate_trajectory: two-ion states only");

    const Bipartition bp{{initial.ion_ids()[0]}, {initial.ion_ids()[1]}};
    const auto dim = static_cast<Eigen::Index>(initial.dim());

    Eigen::VectorXcd psi(dim);
    for (std::size_t i = 0; i < initial.dim(); ++i)
        psi(static_cast<Eigen::Index>(i)) = initial.amplitude(i);

    Trajectory traj;
    traj.g = g;

    auto record = [&](double t) {
        StateVector snapshot = initial;
        double p_e = 0;
        for (std::size_t i = 0; i < initial.dim(); ++i) {
            snapshot.amplitude(i) = psi(static_cast<Eigen::Index>(i));
            int excited = 0;
            for (int s = 0; s < 2; ++s)
                if (snapshot.level_at(i, s) == Level::e) ++excited;
            p_e += excited * std::norm(psi(static_cast<Eigen::Index>(i)));
        }
        double integral = 0;
        if (!traj.times.empty())
            integral = traj.integral_p_e.back() +
                       0.5 * (traj.p_e.back() + p_e) * (t - traj.times.back());
        // entropy is evaluated on a normalized copy; the propagated state
        // itself keeps its drift
        StateVector for_entropy = snapshot;
        for_entropy.normalize();
        traj.times.push_back(t);
        traj.p_e.push_back(p_e);
        traj.entropy_bits.push_back(von_neumann_entropy(for_entropy, bp));
        traj.integral_p_e.push_back(integral);
        traj.states.push_back(std::move(snapshot));
    };

    record(0.0);
    double t = 0;
    for (const auto& segment : plan) {
        if (!(segment.duration > 0))
            throw parameter_error("simulate_gate_trajectory: segment duration must be positive");
        const Eigen::MatrixXcd h = detail::segment_hamiltonian(initial, segment, g);
        const auto rhs = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
            return Complex(0.0, -1.0) * (h * v);
        };
        const int steps = static_cast<int>(std::ceil(segment.duration / dt));
        const double step = segment.duration / steps;
        for (int k = 0; k < steps; ++k) {
            const Eigen::VectorXcd k1 = rhs(psi);
            const Eigen::VectorXcd k2 = rhs(psi + 0.5 * step * k1);
            const Eigen::VectorXcd k3 = rhs(psi + 0.5 * step * k2);
            const Eigen::VectorXcd k4 = rhs(psi + step * k3);
            psi += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += step;
            const double drift = std::abs(psi.norm() - 1.0);
            traj.max_norm_drift = std::max(traj.max_norm_drift, drift);
            if (drift > 1e-6)
                throw step_size_error(
                    "norm drift exceeded 1e-6; rerun with a smaller dt");
            record(t);
        }
    }
    return traj;
}

/// Blockade controlled-phase pulse plan: pi on the control, 2 pi on the
/// target, pi on the control, all resonant 0<->e drives at the given
/// Rabi rate (rad/s).
inline std::vector<PulseSegment> blockade_cz_plan(int control_id, int target_id, double rabi) {
    if (!(rabi > 0)) throw parameter_error("blockade_cz_plan: rabi rate must be positive");
    const double t_pi = M_PI / rabi;
    return {
        {t_pi, {Drive{control_id, kZeroE, rabi, 0.0, 0.0}}},
        {2 * t_pi, {Drive{target_id, kZeroE, rabi, 0.0, 0.0}}},
        {t_pi, {Drive{control_id, kZeroE, rabi, 0.0, 0.0}}},
    };
}

}  // namespace reqc
