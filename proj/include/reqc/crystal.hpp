#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "reqc/errors.hpp"
#include "reqc/rng.hpp"

namespace reqc {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    friend bool operator==(const Vec3&, const Vec3&) = default;
};

enum class Species : int { qubit_dopant = 0, readout = 1 };

/// Classical level labels for the four-level ion model
/// {|0>, |1>, |aux>, |e>}. Also used as the state-vector basis order.
enum class Level : int { zero = 0, one = 1, aux = 2, e = 3 };

inline constexpr int kLevels = 4;

struct Ion {
    int id = 0;
    Vec3 pos;            // meters, inside the periodic box
    double shift_hz = 0; // inhomogeneous shift, in [0, bandwidth)
    double dmu = 0;      // static dipole-moment difference, C*m, > 0
    Species species = Species::qubit_dopant;
    Level level = Level::zero;

    friend bool operator==(const Ion&, const Ion&) = default;
};

struct CrystalParams {
    double box_side = 0;     // meters
    double density = 0;      // ions per m^3
    double bandwidth_hz = 0; // inhomogeneous width B
    double dmu_default = 0.8e-31;
    std::uint64_t seed = 0;

    friend bool operator==(const CrystalParams&, const CrystalParams&) = default;
};

struct Crystal {
    CrystalParams params;
    std::vector<Ion> ions;

    friend bool operator==(const Crystal&, const Crystal&) = default;
};

/// Frequency channels carved out of the inhomogeneous profile.
/// Channel k accepts ions with |shift - centers[k]| <= channel_width/2
/// (closed interval at the edges).
struct ChannelPlan {
    std::vector<double> centers_hz;
    double channel_width_hz = 0;
    double vacated_width_hz = 0;
};

struct CouplingParams {
    double g_ref_hz = 8.0e7;   // coupling of two reference dipoles at r_ref
    double r_ref_m = 1.0e-9;
    double dmu_ref = 0.8e-31;  // C*m
    double g_min_hz = 1.0e6;   // blockade threshold

    bool valid() const {
        return g_ref_hz > 0 && r_ref_m > 0 && dmu_ref > 0 && g_min_hz > 0;
    }
};

struct CouplingEdge {
    int a = 0, b = 0;
    double g_hz = 0;
};

/// Thresholded dipole-coupling adjacency. Symmetric, no self-edges,
/// every stored coupling >= g_min.
class CouplingGraph {
public:
    CouplingGraph() = default;

    explicit CouplingGraph(const std::vector<int>& ids) {
        for (int id : ids) index_.emplace(id, adj_.size()), adj_.emplace_back();
        ids_ = ids;
    }

    void add_edge(int a, int b, double g_hz) {
        adj_[slot(a)].push_back({b, g_hz});
        adj_[slot(b)].push_back({a, g_hz});
        edges_.push_back({a, b, g_hz});
    }

    bool has_node(int id) const { return index_.count(id) != 0; }

    const std::vector<std::pair<int, double>>& neighbors(int id) const {
        return adj_[slot(id)];
    }

    /// Coupling of a specific pair, or 0 if below threshold.
    double coupling(int a, int b) const {
        for (const auto& [nb, g] : neighbors(a))
            if (nb == b) return g;
        return 0.0;
    }

    const std::vector<CouplingEdge>& edges() const { return edges_; }
    const std::vector<int>& node_ids() const { return ids_; }
    std::size_t num_nodes() const { return adj_.size(); }

private:
    std::size_t slot(int id) const {
        auto it = index_.find(id);
        if (it == index_.end())
            throw addressing_error("unknown ion id " + std::to_string(id) + " in coupling graph");
        return it->second;
    }

    std::vector<int> ids_;
    std::unordered_map<int, std::size_t> index_;
    std::vector<std::vector<std::pair<int, double>>> adj_;
    std::vector<CouplingEdge> edges_;
};

inline void validate(const CrystalParams& p) {
    if (!(p.box_side > 0)) throw parameter_error("crystal params: box_side must be positive");
    if (!(p.density >= 0)) throw parameter_error("crystal params: density must be non-negative");
    if (!(p.bandwidth_hz > 0)) throw parameter_error("crystal params: bandwidth must be positive");
    if (!(p.dmu_default > 0)) throw parameter_error("crystal params: dmu_default must be positive");
}

inline void validate(const ChannelPlan& plan) {
    if (!(plan.channel_width_hz > 0)) throw plan_error("channel plan: channel_width must be positive");
    if (!(plan.channel_width_hz < plan.vacated_width_hz))
        throw plan_error("channel plan: channel_width must be smaller than vacated_width");
    for (std::size_t i = 0; i < plan.centers_hz.size(); ++i)
        for (std::size_t j = i + 1; j < plan.centers_hz.size(); ++j)
            if (std::abs(plan.centers_hz[i] - plan.centers_hz[j]) <= plan.vacated_width_hz)
                throw plan_error("channel plan: centers " + std::to_string(i) + " and " +
                                 std::to_string(j) + " closer than the vacated width");
}

/// Minimum-image displacement component under period L.
inline double min_image(double d, double box_side) {
    d -= box_side * std::round(d / box_side);
    return d;
}

inline double min_image_distance(const Vec3& a, const Vec3& b, double box_side) {
    const double dx = min_image(a.x - b.x, box_side);
    const double dy = min_image(a.y - b.y, box_side);
    const double dz = min_image(a.z - b.z, box_side);
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Poisson-random doped crystal: ion count ~ Poisson(density * V),
/// positions and shifts i.i.d. uniform. Fully reproducible from the seed.
inline Crystal generate_crystal(const CrystalParams& p) {
    validate(p);
    Rng rng(p.seed);
    const double volume = p.box_side * p.box_side * p.box_side;
    const long count = rng.poisson(p.density * volume);

    Crystal crystal;
    crystal.params = p;
    crystal.ions.reserve(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) {
        Ion ion;
        ion.id = static_cast<int>(i);
        ion.pos = {rng.uniform(0.0, p.box_side), rng.uniform(0.0, p.box_side),
                   rng.uniform(0.0, p.box_side)};
        ion.shift_hz = rng.uniform(0.0, p.bandwidth_hz);
        ion.dmu = p.dmu_default;
        ion.species = Species::qubit_dopant;
        ion.level = Level::zero;
        crystal.ions.push_back(ion);
    }
    return crystal;
}

/// Dipole-dipole coupling g = g_ref * (dmu_a*dmu_b/dmu_ref^2) * (r_ref/r)^3
/// with r the minimum-image distance. Isotropic by construction.
inline double coupling_strength(const Ion& a, const Ion& b, const CouplingParams& cp,
                                double box_side) {
    if (!cp.valid()) throw parameter_error("coupling params must be strictly positive");
    const double r = min_image_distance(a.pos, b.pos, box_side);
    if (!(r > 0))
        throw geometry_error("coincident ions " + std::to_string(a.id) + " and " +
                             std::to_string(b.id));
    const double ratio = cp.r_ref_m / r;
    return cp.g_ref_hz * (a.dmu * b.dmu) / (cp.dmu_ref * cp.dmu_ref) * ratio * ratio * ratio;
}

/// Interaction radius implied by g(R) = g_min for a pair of equal dipoles.
inline double threshold_radius(const CouplingParams& cp, double dmu) {
    return cp.r_ref_m *
           std::cbrt(cp.g_ref_hz * dmu * dmu / (cp.dmu_ref * cp.dmu_ref * cp.g_min_hz));
}

namespace detail {

/// Uniform-grid neighbor search under periodic boundary conditions.
/// Falls back to all-pairs when the box holds fewer than 3 cells per axis.
inline void for_each_candidate_pair(const Crystal& c, double cutoff,
                                    auto&& visit) {
    const double L = c.params.box_side;
    const std::size_t n = c.ions.size();
    // no finer than ~1 ion per cell on average
    const int ncell_cap = std::max(3, static_cast<int>(std::cbrt(static_cast<double>(n))) + 1);
    const int ncell = std::min(static_cast<int>(std::floor(L / cutoff)), ncell_cap);

    if (ncell < 3) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) visit(i, j);
        return;
    }

    const double cell = L / ncell;
    auto cell_of = [&](const Vec3& p) {
        int cx = std::min(ncell - 1, static_cast<int>(p.x / cell));
        int cy = std::min(ncell - 1, static_cast<int>(p.y / cell));
        int cz = std::min(ncell - 1, static_cast<int>(p.z / cell));
        return (cx * ncell + cy) * ncell + cz;
    };

    std::vector<std::vector<std::size_t>> bins(static_cast<std::size_t>(ncell) * ncell * ncell);
    for (std::size_t i = 0; i < n; ++i) bins[cell_of(c.ions[i].pos)].push_back(i);

    auto wrap = [&](int k) { return (k % ncell + ncell) % ncell; };
    for (int cx = 0; cx < ncell; ++cx)
        for (int cy = 0; cy < ncell; ++cy)
            for (int cz = 0; cz < ncell; ++cz) {
                const auto& home = bins[(cx * ncell + cy) * ncell + cz];
                if (home.empty()) continue;
                for (int dx = -1; dx <= 1; ++dx)
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dz = -1; dz <= 1; ++dz) {
                            const int idx =
                                (wrap(cx + dx) * ncell + wrap(cy + dy)) * ncell + wrap(cz + dz);
                            const auto& other = bins[idx];
                            const bool same = idx == (cx * ncell + cy) * ncell + cz;
                            // visit each unordered pair once
                            if (idx < (cx * ncell + cy) * ncell + cz) continue;
                            for (std::size_t ii = 0; ii < home.size(); ++ii) {
                                const std::size_t jstart = same ? ii + 1 : 0;
                                for (std::size_t jj = jstart; jj < other.size(); ++jj)
                                    visit(home[ii], other[jj]);
                            }
                        }
            }
}

}  // namespace detail

/// Edge (a,b) present iff coupling_strength(a,b) >= g_min.
inline CouplingGraph coupling_graph(const Crystal& c, const CouplingParams& cp) {
    if (!cp.valid()) throw parameter_error("coupling params must be strictly positive");
    std::vector<int> ids;
    ids.reserve(c.ions.size());
    double dmu_max = 0;
    for (const auto& ion : c.ions) {
        ids.push_back(ion.id);
        dmu_max = std::max(dmu_max, ion.dmu);
    }
    CouplingGraph graph(ids);
    if (c.ions.size() < 2) return graph;

    // largest distance at which any pair can still reach g_min
    const double cutoff = std::min(threshold_radius(cp, dmu_max), c.params.box_side);
    detail::for_each_candidate_pair(c, cutoff, [&](std::size_t i, std::size_t j) {
        const double r = min_image_distance(c.ions[i].pos, c.ions[j].pos, c.params.box_side);
        if (r > cutoff) return;
        const double g = coupling_strength(c.ions[i], c.ions[j], cp, c.params.box_side);
        if (g >= cp.g_min_hz) graph.add_edge(c.ions[i].id, c.ions[j].id, g);
    });
    return graph;
}

/// Channel membership: ion i in channel k iff |shift_i - center_k| <= width/2.
/// Plan validation guarantees each ion lands in at most one channel.
inline std::vector<std::vector<int>> assign_channels(const Crystal& c, const ChannelPlan& plan) {
    validate(plan);
    std::vector<std::vector<int>> members(plan.centers_hz.size());
    const double half = plan.channel_width_hz / 2;
    for (const auto& ion : c.ions)
        for (std::size_t k = 0; k < plan.centers_hz.size(); ++k)
            if (std::abs(ion.shift_hz - plan.centers_hz[k]) <= half) {
                members[k].push_back(ion.id);
                break;
            }
    return members;
}

}  // namespace reqc
