#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "reqc/crystal.hpp"
#include "reqc/errors.hpp"
#include "reqc/rng.hpp"

namespace reqc {

/// P_N = (e^{-nbar} nbar)^N, the probability that a candidate ion sees
/// exactly one partner in each of N channels. Maximal at nbar = 1.
inline double p_register_exact(double nbar, int n_channels) {
    if (nbar < 0) throw parameter_error("p_register_exact: nbar must be non-negative");
    if (n_channels < 0) throw parameter_error("p_register_exact: N must be non-negative");
    return std::pow(std::exp(-nbar) * nbar, n_channels);
}

/// P'_N = (1 - e^{-nbar})^N, register yield once any non-zero occupancy
/// can be distilled down to a single ion.
inline double p_register_postselect(double nbar, int n_channels) {
    if (nbar < 0) throw parameter_error("p_register_postselect: nbar must be non-negative");
    if (n_channels < 0) throw parameter_error("p_register_postselect: N must be non-negative");
    return std::pow(1.0 - std::exp(-nbar), n_channels);
}

struct RequiredNbar {
    double approx; // log(N / (1 - P)), the large-N shortcut
    double exact;  // -log(1 - P^{1/N}), direct inversion of P'_N
};

inline RequiredNbar required_nbar(int n_channels, double target_p) {
    if (n_channels < 1) throw parameter_error("required_nbar: N must be at least 1");
    if (!(target_p > 0 && target_p < 1))
        throw parameter_error("required_nbar: target probability must lie in (0, 1)");
    RequiredNbar r;
    r.approx = std::log(n_channels / (1.0 - target_p));
    r.exact = -std::log(1.0 - std::pow(target_p, 1.0 / n_channels));
    return r;
}

/// Interaction-volume gain of the bus architecture: 8^{n-2} for an
/// n-ion register (the first two ions are constrained either way).
inline double enhancement_factor(int n_ions) {
    if (n_ions < 2) throw parameter_error("enhancement_factor: register needs at least 2 ions");
    return std::pow(8.0, n_ions - 2);
}

struct ConfidenceInterval {
    double lo = 0, hi = 0;
};

/// Wilson 95% score interval.
inline ConfidenceInterval wilson_interval(std::uint64_t hits, std::uint64_t trials) {
    if (trials == 0) return {0.0, 1.0};
    const double z = 1.959963984540054;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(hits) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2 * n)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

enum class Architecture { clique, bus };

inline const char* to_string(Architecture a) {
    return a == Architecture::bus ? "bus" : "clique";
}

struct CensusResult {
    Architecture architecture = Architecture::bus;
    int n_channels = 0;
    std::uint64_t trials = 0;
    std::uint64_t hits = 0;

    double p_hat() const {
        return trials ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0;
    }
    ConfidenceInterval ci95() const { return wilson_interval(hits, trials); }

    /// Merge partial results from independent crystals.
    CensusResult& operator+=(const CensusResult& other) {
        trials += other.trials;
        hits += other.hits;
        return *this;
    }
};

/// Expected channel occupancy within the interaction ball:
/// density * (4/3) pi R^3 * (channel_width / bandwidth).
inline double expected_ball_occupancy(const CrystalParams& p, const CouplingParams& cp,
                                      const ChannelPlan& plan) {
    const double r = threshold_radius(cp, p.dmu_default);
    return p.density * (4.0 / 3.0) * M_PI * r * r * r * plan.channel_width_hz /
           p.bandwidth_hz;
}

/// Candidate census over one crystal. Every ion in the bus channel is a
/// candidate (variance reduction over random picks). A hit requires
/// exactly one coupled ion in each qubit channel; the clique architecture
/// additionally requires those picks to be pairwise coupled.
inline CensusResult census(const Crystal& crystal, const CouplingGraph& graph,
                           const ChannelPlan& plan, std::size_t bus_channel,
                           Architecture architecture) {
    if (bus_channel >= plan.centers_hz.size())
        throw parameter_error("census: bus channel index out of range");

    const auto members = assign_channels(crystal, plan);
    // map ion id -> channel index (or -1)
    int max_id = -1;
    for (const auto& ion : crystal.ions) max_id = std::max(max_id, ion.id);
    std::vector<int> lookup(static_cast<std::size_t>(max_id + 1), -1);
    for (std::size_t k = 0; k < members.size(); ++k)
        for (int id : members[k]) lookup[static_cast<std::size_t>(id)] = static_cast<int>(k);

    const std::size_t n_qubit_channels = plan.centers_hz.size() - 1;

    CensusResult result;
    result.architecture = architecture;
    result.n_channels = static_cast<int>(n_qubit_channels);

    std::vector<int> pick(plan.centers_hz.size(), -1);
    std::vector<int> count(plan.centers_hz.size(), 0);
    for (int candidate : members[bus_channel]) {
        ++result.trials;
        std::fill(pick.begin(), pick.end(), -1);
        std::fill(count.begin(), count.end(), 0);
        for (const auto& [nb, g] : graph.neighbors(candidate)) {
            const int k = lookup[static_cast<std::size_t>(nb)];
            if (k < 0 || static_cast<std::size_t>(k) == bus_channel) continue;
            ++count[static_cast<std::size_t>(k)];
            pick[static_cast<std::size_t>(k)] = nb;
        }
        bool ok = true;
        for (std::size_t k = 0; ok && k < plan.centers_hz.size(); ++k) {
            if (k == bus_channel) continue;
            ok = count[k] == 1;
        }
        if (ok && architecture == Architecture::clique) {
            for (std::size_t k = 0; ok && k < plan.centers_hz.size(); ++k) {
                if (k == bus_channel || pick[k] < 0) continue;
                for (std::size_t m = k + 1; ok && m < plan.centers_hz.size(); ++m) {
                    if (m == bus_channel || pick[m] < 0) continue;
                    ok = graph.coupling(pick[k], pick[m]) > 0.0;
                }
            }
        }
        if (ok) ++result.hits;
    }
    return result;
}

/// P(N points drawn uniformly in a ball of radius R are pairwise within R).
/// Conditioned on the bus census succeeding, the per-channel representative
/// is uniform in the candidate's interaction ball and independent across
/// channels, so the bus/clique register-probability ratio equals exactly
/// 1 / (this probability). Scale-free, so the unit ball suffices.
inline CensusResult pairwise_in_ball_probability(int n_channels, std::uint64_t trials, Rng& rng) {
    CensusResult result;
    result.architecture = Architecture::clique;
    result.n_channels = n_channels;
    std::vector<Vec3> pts(static_cast<std::size_t>(n_channels));
    for (std::uint64_t t = 0; t < trials; ++t) {
        for (auto& p : pts) {
            do {
                p = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
            } while (p.x * p.x + p.y * p.y + p.z * p.z > 1.0);
        }
        bool ok = true;
        for (std::size_t i = 0; ok && i < pts.size(); ++i)
            for (std::size_t j = i + 1; ok && j < pts.size(); ++j) {
                const double dx = pts[i].x - pts[j].x;
                const double dy = pts[i].y - pts[j].y;
                const double dz = pts[i].z - pts[j].z;
                ok = dx * dx + dy * dy + dz * dz <= 1.0;
            }
        ++result.trials;
        if (ok) ++result.hits;
    }
    return result;
}

/// Hole-burning initialization, simulated as classical level bookkeeping.
/// Iterates to a fixpoint: a channel ion survives only while coupled to a
/// surviving bus ion, and a bus ion survives only while every qubit channel
/// holds at least one coupled surviving ion. Idempotent by construction.
inline Crystal holeburn_simulate(const Crystal& crystal, const CouplingGraph& graph,
                                 const ChannelPlan& plan, std::size_t bus_channel) {
    if (bus_channel >= plan.centers_hz.size())
        throw parameter_error("holeburn_simulate: bus channel index out of range");

    Crystal out = crystal;
    const auto members = assign_channels(out, plan);

    int max_id = -1;
    for (const auto& ion : out.ions) max_id = std::max(max_id, ion.id);
    std::vector<int> channel_of(static_cast<std::size_t>(max_id + 1), -1);
    std::vector<Ion*> by_id(static_cast<std::size_t>(max_id + 1), nullptr);
    for (auto& ion : out.ions) by_id[static_cast<std::size_t>(ion.id)] = &ion;
    for (std::size_t k = 0; k < members.size(); ++k)
        for (int id : members[k]) channel_of[static_cast<std::size_t>(id)] = static_cast<int>(k);

    auto active = [&](int id) { return by_id[static_cast<std::size_t>(id)]->level != Level::aux; };

    bool changed = true;
    while (changed) {
        changed = false;
        // qubit-channel ions need a surviving bus neighbor
        for (std::size_t k = 0; k < members.size(); ++k) {
            if (k == bus_channel) continue;
            for (int id : members[k]) {
                if (!active(id)) continue;
                bool protected_by_bus = false;
                for (const auto& [nb, g] : graph.neighbors(id))
                    if (channel_of[static_cast<std::size_t>(nb)] ==
                            static_cast<int>(bus_channel) &&
                        active(nb)) {
                        protected_by_bus = true;
                        break;
                    }
                if (!protected_by_bus) {
                    by_id[static_cast<std::size_t>(id)]->level = Level::aux;
                    changed = true;
                }
            }
        }
        // bus ions need a surviving coupled ion in every qubit channel
        for (int id : members[bus_channel]) {
            if (!active(id)) continue;
            std::vector<bool> covered(plan.centers_hz.size(), false);
            for (const auto& [nb, g] : graph.neighbors(id)) {
                const int k = channel_of[static_cast<std::size_t>(nb)];
                if (k >= 0 && active(nb)) covered[static_cast<std::size_t>(k)] = true;
            }
            bool full = true;
            for (std::size_t k = 0; full && k < covered.size(); ++k) {
                if (k == bus_channel) continue;
                full = covered[k];
            }
            if (!full) {
                by_id[static_cast<std::size_t>(id)]->level = Level::aux;
                changed = true;
            }
        }
    }
    return out;
}

}  // namespace reqc
