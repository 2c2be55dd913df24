#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "reqc/errors.hpp"
#include "reqc/statevector.hpp"

namespace reqc {

/// Split of a state's ions into two subsystems. Sides keep the order in
/// which ions are listed; together they must cover every ion exactly once.
struct Bipartition {
    std::vector<int> side_a;
    std::vector<int> side_b;
};

namespace detail {

struct BipartitionIndex {
    std::vector<int> slots_a, slots_b;
    std::size_t dim_a = 1, dim_b = 1;
};

inline BipartitionIndex index_bipartition(const StateVector& state, const Bipartition& bp) {
    BipartitionIndex bi;
    std::vector<bool> seen(static_cast<std::size_t>(state.num_ions()), false);
    auto take = [&](const std::vector<int>& ids, std::vector<int>& slots, std::size_t& dim) {
        for (int id : ids) {
            const int slot = state.slot_of(id);
            if (seen[static_cast<std::size_t>(slot)])
                throw parameter_error("bipartition lists ion " + std::to_string(id) + " twice");
            seen[static_cast<std::size_t>(slot)] = true;
            slots.push_back(slot);
            dim *= kLevels;
        }
    };
    take(bp.side_a, bi.slots_a, bi.dim_a);
    take(bp.side_b, bi.slots_b, bi.dim_b);
    if (bi.dim_a * bi.dim_b != state.dim())
        throw parameter_error("bipartition must cover all ions of the state");
    return bi;
}

inline std::size_t side_index(const StateVector& state, std::size_t basis,
                              const std::vector<int>& slots) {
    std::size_t idx = 0;
    for (int slot : slots) idx = idx * kLevels + static_cast<std::size_t>(state.level_at(basis, slot));
    return idx;
}

}  // namespace detail

/// Schmidt form |Psi> = sum_i c_i |v_i>|u_i> with real non-negative c_i
/// in descending order and orthonormal side bases. The phase convention
/// makes the first non-vanishing component of each |v_i> real positive.
struct SchmidtDecomposition {
    std::vector<double> coeffs;
    Eigen::MatrixXcd basis_a; // columns |v_i>
    Eigen::MatrixXcd basis_b; // columns |u_i>
};

inline SchmidtDecomposition schmidt_decompose(const StateVector& state, const Bipartition& bp) {
    if (std::abs(state.norm() - 1.0) > 1e-9)
        throw normalization_error("schmidt_decompose: state norm deviates from 1");
    const auto bi = detail::index_bipartition(state, bp);

    Eigen::MatrixXcd m(bi.dim_a, bi.dim_b);
    m.setZero();
    for (std::size_t g = 0; g < state.dim(); ++g)
        m(static_cast<Eigen::Index>(detail::side_index(state, g, bi.slots_a)),
          static_cast<Eigen::Index>(detail::side_index(state, g, bi.slots_b))) +=
            state.amplitude(g);

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);

    SchmidtDecomposition sd;
    const Eigen::Index r = svd.singularValues().size();
    sd.coeffs.assign(svd.singularValues().data(), svd.singularValues().data() + r);
    sd.basis_a = svd.matrixU();
    sd.basis_b = svd.matrixV().conjugate(); // M = U S V^H  =>  |u_i> = conj(V col i)

    for (Eigen::Index k = 0; k < r; ++k) {
        for (Eigen::Index row = 0; row < sd.basis_a.rows(); ++row) {
            const Complex v = sd.basis_a(row, k);
            if (std::abs(v) > 1e-12) {
                const Complex phase = v / std::abs(v);
                sd.basis_a.col(k) *= std::conj(phase);
                sd.basis_b.col(k) *= phase;
                break;
            }
        }
    }
    return sd;
}

/// E = -sum c_i^2 log2(c_i^2) in bits, with 0 log 0 := 0.
inline double von_neumann_entropy(const StateVector& state, const Bipartition& bp) {
    const auto sd = schmidt_decompose(state, bp);
    double e = 0;
    for (double c : sd.coeffs) {
        const double p = c * c;
        if (p > 0) e -= p * std::log2(p);
    }
    return std::max(0.0, e);
}

struct RateResult {
    double edot_bits_per_s = 0;
    bool degenerate = false; // Schmidt spectrum gap below 1e-6; value basis-sensitive
};

/// dE/dt = 2 sum_{i != j} log2(c_j/c_i) c_i c_j Im <v_i u_i|H|v_j u_j>,
/// terms with a vanishing coefficient contributing their limit 0.
/// H acts on the full Hilbert space in this state's basis indexing and
/// must be Hermitian; its scale sets the time unit of the result.
inline RateResult entanglement_rate(const StateVector& state, const Bipartition& bp,
                                    const Eigen::MatrixXcd& h) {
    const auto bi = detail::index_bipartition(state, bp);
    const auto dim = static_cast<Eigen::Index>(state.dim());
    if (h.rows() != dim || h.cols() != dim)
        throw operator_error("entanglement_rate: operator dimension mismatch");
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw operator_error("entanglement_rate: operator is not Hermitian");

    const auto sd = schmidt_decompose(state, bp);
    const std::size_t r = sd.coeffs.size();
    constexpr double czero = 1e-12;

    // product vectors |v_i u_i> embedded into the full basis
    Eigen::MatrixXcd prod(dim, static_cast<Eigen::Index>(r));
    prod.setZero();
    for (std::size_t g = 0; g < state.dim(); ++g) {
        const auto ia = static_cast<Eigen::Index>(detail::side_index(state, g, bi.slots_a));
        const auto ib = static_cast<Eigen::Index>(detail::side_index(state, g, bi.slots_b));
        for (std::size_t k = 0; k < r; ++k)
            prod(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(k)) =
                sd.basis_a(ia, static_cast<Eigen::Index>(k)) *
                sd.basis_b(ib, static_cast<Eigen::Index>(k));
    }
    const Eigen::MatrixXcd hm = prod.adjoint() * h * prod;

    RateResult result;
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < r; ++i)
        if (sd.coeffs[i] > czero && sd.coeffs[i + 1] > czero)
            min_gap = std::min(min_gap, sd.coeffs[i] - sd.coeffs[i + 1]);
    result.degenerate = min_gap < 1e-6;

    double sum = 0;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) {
            if (i == j || sd.coeffs[i] <= czero || sd.coeffs[j] <= czero) continue;
            sum += std::log2(sd.coeffs[j] / sd.coeffs[i]) * sd.coeffs[i] * sd.coeffs[j] *
                   hm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)).imag();
        }
    result.edot_bits_per_s = 2 * sum;
    return result;
}

struct RateReport {
    double entropy_bits = 0;
    double edot_bits_per_s = 0;
    double p_e_tot = 0;
    double bound_bits_per_s = 0;
    bool satisfied = false;
    bool degenerate = false;
};

/// Total excited population <Psi| (1 x Pe + Pe x 1) |Psi> for a two-ion
/// state; the doubly excited component counts twice.
inline double total_excited_population(const StateVector& state) {
    double p = 0;
    for (std::size_t g = 0; g < state.dim(); ++g) {
        int excited = 0;
        for (int s = 0; s < state.num_ions(); ++s)
            if (state.level_at(g, s) == Level::e) ++excited;
        p += excited * std::norm(state.amplitude(g));
    }
    return p;
}

/// Builds H_c = g |ee><ee| on a two-ion state in this basis indexing.
inline Eigen::MatrixXcd coupling_hamiltonian(const StateVector& state, double g) {
    if (state.num_ions() != 2)
        throw parameter_error("coupling_hamiltonian: defined for two-ion states");
    Eigen::MatrixXcd h(static_cast<Eigen::Index>(state.dim()),
                       static_cast<Eigen::Index>(state.dim()));
    h.setZero();
    const std::size_t ee = static_cast<std::size_t>(Level::e) * kLevels +
                           static_cast<std::size_t>(Level::e);
    h(static_cast<Eigen::Index>(ee), static_cast<Eigen::Index>(ee)) = g;
    return h;
}

/// Checks |dE/dt| <= (1/2) P_e^tot g for the coupling term H_c = g|ee><ee|.
/// Sides must hold one ion each.
inline RateReport rate_bound_check(const StateVector& state, const Bipartition& bp, double g) {
    if (!(g > 0)) throw parameter_error("rate_bound_check: g must be positive");
    if (bp.side_a.size() != 1 || bp.side_b.size() != 1)
        throw parameter_error("rate_bound_check: each side must hold exactly one ion");

    RateReport report;
    const auto rate = entanglement_rate(state, bp, coupling_hamiltonian(state, g));
    report.edot_bits_per_s = rate.edot_bits_per_s;
    report.degenerate = rate.degenerate;
    report.entropy_bits = von_neumann_entropy(state, bp);
    report.p_e_tot = total_excited_population(state);
    report.bound_bits_per_s = 0.5 * report.p_e_tot * g;
    report.satisfied = std::abs(report.edot_bits_per_s) <= report.bound_bits_per_s + 1e-9;
    return report;
}

/// f(theta) = |log2(tan theta)| sin(theta) cos(theta); continuous
/// extension 0 at the interval ends.
inline double f_theta(double theta) {
    if (theta < 0 || theta > M_PI / 2)
        throw parameter_error("f_theta: theta must lie in [0, pi/2]");
    if (theta == 0 || theta == M_PI / 2) return 0.0;
    return std::abs(std::log2(std::tan(theta))) * std::sin(theta) * std::cos(theta);
}

struct FMax {
    double theta_star = 0;
    double f_star = 0;
};

/// Bounded maximization of f on (0, pi/2): dense grid bracket followed by
/// golden-section refinement. f is symmetric about pi/4; the maximizer
/// below pi/4 is reported.
inline FMax f_max() {
    const double lo_end = 1e-9, hi_end = M_PI / 4;
    const int grid = 1 << 14;
    double best_theta = lo_end;
    double best_f = 0;
    for (int i = 0; i <= grid; ++i) {
        const double t = lo_end + (hi_end - lo_end) * i / grid;
        const double f = f_theta(t);
        if (f > best_f) {
            best_f = f;
            best_theta = t;
        }
    }
    double a = std::max(lo_end, best_theta - (hi_end - lo_end) / grid);
    double b = std::min(hi_end, best_theta + (hi_end - lo_end) / grid);
    const double inv_phi = (std::sqrt(5.0) - 1) / 2;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f_theta(c), fd = f_theta(d);
    while (b - a > 1e-10) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f_theta(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f_theta(d);
        }
    }
    FMax result;
    result.theta_star = (a + b) / 2;
    result.f_star = f_theta(result.theta_star);
    return result;
}

}  // namespace reqc
