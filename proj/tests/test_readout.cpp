#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "reqc/readout.hpp"
#include "reqc/statevector.hpp"

using namespace reqc;

namespace {

ChainGenParams tight_gen_params() {
    ChainGenParams p;
    p.readout_freq_lo_hz = 1.0e8;
    p.readout_freq_hi_hz = 4.0e8;
    p.qubit_freq_lo_hz = 1.0e8;
    p.qubit_freq_hi_hz = 1.9e9;
    p.min_separation_hz = 2.0e8;
    p.coupling_lo_hz = 5.0e8;
    p.coupling_hi_hz = 1.2e9;
    return p;
}

}  // namespace

TEST_CASE("photon budget reproduces the requirement arithmetic") {
    const ReadoutModel m; // 2 ms lifetime, 1%, 100 photons
    const auto b = photon_budget(m);
    REQUIRE(b.required_emission_interval_s == Catch::Approx(2.0e-7).epsilon(1e-12));
    REQUIRE(b.emitted_photons == Catch::Approx(1.0e4).epsilon(1e-12));
    REQUIRE(b.max_trap_probability == Catch::Approx(1.005e-6).margin(1e-9));
    REQUIRE(b.required_cycles > 900000);
    REQUIRE(b.required_cycles < 1100000);
}

TEST_CASE("photon budget degenerate and covariance cases") {
    ReadoutModel m;
    m.detection_efficiency = 1.0;
    m.photons_needed = 1;
    m.detection_threshold = 1;
    REQUIRE(photon_budget(m).required_emission_interval_s ==
            Catch::Approx(m.qubit_e_lifetime_s).epsilon(1e-12));

    ReadoutModel doubled;
    doubled.qubit_e_lifetime_s *= 2;
    REQUIRE(photon_budget(doubled).required_emission_interval_s ==
            Catch::Approx(2 * photon_budget(ReadoutModel{}).required_emission_interval_s)
                .epsilon(1e-12));

    ReadoutModel bad;
    bad.detection_efficiency = 0.0;
    REQUIRE_THROWS_AS(photon_budget(bad), parameter_error);
}

TEST_CASE("stark shift is exactly linear") {
    REQUIRE(stark_shift({35.0e3, 1.0e6}) == 3.5e10); // 1 MV/cm -> 35 GHz
    REQUIRE(stark_shift({35.0e3, 0.0}) == 0.0);
    REQUIRE(stark_shift({35.0e3, 1.0}) == 35.0e3);
    const double a = stark_shift({35.0e3, 123.5});
    const double b = stark_shift({35.0e3, 7718.25});
    REQUIRE(stark_shift({35.0e3, 123.5 + 7718.25}) == Catch::Approx(a + b).epsilon(1e-15));
    REQUIRE_THROWS_AS(stark_shift({35.0e3, -1.0}), parameter_error);
    REQUIRE_THROWS_AS(stark_shift({0.0, 1.0}), parameter_error);
}

TEST_CASE("collision probability is the birthday bound") {
    REQUIRE(collision_probability(0, 100) == 0.0);
    REQUIRE(collision_probability(1, 100) == 0.0);
    REQUIRE(collision_probability(2, 2) == Catch::Approx(0.5).epsilon(1e-15));
    REQUIRE(collision_probability(366, 365) == 1.0);
    // independent factorial-based oracle for the classic case
    const double oracle =
        1.0 - std::exp(std::lgamma(366.0) - std::lgamma(343.0) - 23.0 * std::log(365.0));
    REQUIRE(collision_probability(23, 365) == Catch::Approx(oracle).margin(1e-12));
    REQUIRE(collision_probability(23, 365) == Catch::Approx(0.5073).margin(1e-4));
    REQUIRE_THROWS_AS(collision_probability(3, 0), parameter_error);
}

TEST_CASE("qubit readout fluoresces exactly for |0>") {
    Rng rng(3);
    auto gen = tight_gen_params();
    const auto chain = make_random_chain(2, gen, rng);
    ReadoutModel model; // defaults, trap probability 1e-6
    model.trap_probability_per_cycle = 0.0;

    for (int rep = 0; rep < 200; ++rep) {
        const auto on = readout_qubit(chain, 1, Level::zero, model, rng);
        REQUIRE(on.fluoresced);
        REQUIRE(on.photons_detected >= model.detection_threshold);
        REQUIRE(on.photons_detected < 200);
        REQUIRE_FALSE(on.trapped);

        const auto off = readout_qubit(chain, 1, Level::one, model, rng);
        REQUIRE_FALSE(off.fluoresced);
        REQUIRE(off.photons_detected == 0);

        const auto parked = readout_qubit(chain, 1, Level::aux, model, rng);
        REQUIRE_FALSE(parked.fluoresced);
        REQUIRE(parked.photons_detected == 0);
    }
    REQUIRE_THROWS_AS(readout_qubit(chain, 2, Level::zero, model, rng), routing_error);
}

TEST_CASE("transfer emits pump + cnot and refuses non-adjacent routes") {
    Rng rng(4);
    const auto chain = make_random_chain(3, tight_gen_params(), rng);
    const auto steps = transfer_state(chain, 2, 1);
    REQUIRE(steps.size() == 2);
    REQUIRE(steps[0].kind == ChainStepKind::pump_to_zero);
    REQUIRE(steps[0].target_index == 1);
    REQUIRE(steps[1].kind == ChainStepKind::cnot);
    REQUIRE(steps[1].control_index == 2);
    REQUIRE(steps[1].target_index == 1);
    REQUIRE_THROWS_AS(transfer_state(chain, 3, 1), routing_error);
    REQUIRE_THROWS_AS(transfer_state(chain, 1, 0), routing_error);
    REQUIRE_THROWS_AS(transfer_state(chain, 4, 3), routing_error);
}

TEST_CASE("transfer moves the qubit-2 value onto qubit 1") {
    Rng rng(5);
    const auto chain = make_random_chain(2, tight_gen_params(), rng);
    const int id1 = chain.qubits[0].id, id2 = chain.qubits[1].id;

    StateVector up(std::vector<int>{id1, id2}, {Level::zero, Level::one});
    execute_chain_steps(up, chain, transfer_state(chain, 2, 1), rng);
    REQUIRE(measure_population(up, id1, Level::one) == Catch::Approx(1.0).margin(1e-12));

    StateVector down(std::vector<int>{id1, id2}, {Level::one, Level::zero});
    execute_chain_steps(down, chain, transfer_state(chain, 2, 1), rng);
    REQUIRE(measure_population(down, id1, Level::zero) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("transfer then readout equals direct readout of the source value") {
    Rng rng(6);
    const auto chain = make_random_chain(2, tight_gen_params(), rng);
    ReadoutModel model;
    model.trap_probability_per_cycle = 0.0;
    const int id1 = chain.qubits[0].id, id2 = chain.qubits[1].id;
    for (int rep = 0; rep < 100; ++rep) {
        const Level v1 = rng.bernoulli(0.5) ? Level::one : Level::zero;
        const Level v2 = rng.bernoulli(0.5) ? Level::one : Level::zero;
        StateVector state(std::vector<int>{id1, id2}, {v1, v2});
        execute_chain_steps(state, chain, transfer_state(chain, 2, 1), rng);
        const Level now1 =
            measure_population(state, id1, Level::one) > 0.5 ? Level::one : Level::zero;
        REQUIRE(now1 == v2);
        const auto obs = readout_qubit(chain, 1, now1, model, rng);
        REQUIRE(obs.fluoresced == (v2 == Level::zero));
    }
}

TEST_CASE("generated chains respect separations and couplings") {
    Rng rng(7);
    const auto gen = tight_gen_params();
    for (int rep = 0; rep < 20; ++rep) {
        const auto chain = make_random_chain(3, gen, rng);
        validate(chain, gen.coupling_lo_hz);
        for (std::size_t i = 0; i < chain.qubits.size(); ++i)
            for (std::size_t j = i + 1; j < chain.qubits.size(); ++j)
                REQUIRE(std::abs(chain.qubits[i].shift_hz - chain.qubits[j].shift_hz) >=
                        gen.min_separation_hz);
        REQUIRE(chain.nu0_hz ==
                Catch::Approx(chain.readout_ion.shift_hz + chain.couplings_hz[0]));
    }
}

TEST_CASE("characterization recovers a one-qubit chain exactly") {
    Rng rng(8);
    const auto chain = make_random_chain(1, tight_gen_params(), rng);
    const ReadoutModel model = ce_readout_preset();
    ScanParams scan;
    scan.resolution_hz = 1.0e7;
    const auto found = initiate_characterization(chain, scan, model, rng);
    REQUIRE(std::abs(found.found_nu_readout - chain.readout_ion.shift_hz) <=
            scan.resolution_hz / 2);
    REQUIRE(std::abs(found.found_nu0 - chain.nu0_hz) <= scan.resolution_hz / 2);
    REQUIRE(found.found_qubit_freqs.size() == 1);
    REQUIRE(std::abs(found.found_qubit_freqs[0] - chain.qubits[0].shift_hz) <=
            scan.resolution_hz / 2);
    REQUIRE_FALSE(found.collision_flagged);
}

TEST_CASE("characterization recovers a three-qubit chain with ideal pulses") {
    Rng rng(9);
    const auto chain = make_random_chain(3, tight_gen_params(), rng);
    const ReadoutModel model = ce_readout_preset();
    ScanParams scan;
    const auto found = initiate_characterization(chain, scan, model, rng);
    REQUIRE(found.found_qubit_freqs.size() == 3);
    for (int k = 0; k < 3; ++k)
        REQUIRE(std::abs(found.found_qubit_freqs[static_cast<std::size_t>(k)] -
                         chain.qubits[static_cast<std::size_t>(k)].shift_hz) <=
                scan.resolution_hz / 2);
}

TEST_CASE("a read-out ion outside the scan window exhausts the scan") {
    Rng rng(10);
    auto gen = tight_gen_params();
    auto chain = make_random_chain(1, gen, rng);
    chain.readout_ion.shift_hz = 5.0e9; // far outside the window
    chain.nu0_hz = chain.readout_ion.shift_hz + chain.couplings_hz[0];
    ScanParams scan;
    REQUIRE_THROWS_AS(initiate_characterization(chain, scan, ce_readout_preset(), rng),
                      scan_error);
}

TEST_CASE("imperfect pulses still recover most chains") {
    const int seeds = 25;
    int recovered = 0;
    ScanParams scan;
    scan.pi_pulse_fidelity = 0.99;
    const ReadoutModel model = ce_readout_preset();
    for (int s = 0; s < seeds; ++s) {
        Rng rng(derive_seed(17, "readout-unit", static_cast<std::uint64_t>(s)));
        const auto chain = make_random_chain(3, tight_gen_params(), rng);
        try {
            const auto found = initiate_characterization(chain, scan, model, rng);
            if (found.found_qubit_freqs.size() != 3) continue;
            bool all = true;
            for (int k = 0; k < 3; ++k)
                all = all && std::abs(found.found_qubit_freqs[static_cast<std::size_t>(k)] -
                                      chain.qubits[static_cast<std::size_t>(k)].shift_hz) <=
                                 scan.resolution_hz / 2;
            if (all) ++recovered;
        } catch (const scan_error&) {
        }
    }
    REQUIRE(recovered >= 22);
}

TEST_CASE("colliding qubit frequencies are flagged") {
    Rng rng(11);
    auto chain = make_random_chain(2, tight_gen_params(), rng);
    // qubit 3 lands within a linewidth of qubit 2: the two lines cannot
    // be addressed individually
    Ion q3 = chain.qubits[1];
    q3.id = 3;
    q3.shift_hz += 4.0e7;
    chain.qubits.push_back(q3);
    chain.couplings_hz.push_back(8.0e8);
    ScanParams scan;
    const auto found = initiate_characterization(chain, scan, ce_readout_preset(), rng);
    REQUIRE(found.collision_flagged);
}

TEST_CASE("found frequencies are backed by scan-log evidence") {
    Rng rng(12);
    const auto chain = make_random_chain(2, tight_gen_params(), rng);
    const ReadoutModel model = ce_readout_preset();
    ScanParams scan;
    const auto found = initiate_characterization(chain, scan, model, rng);
    for (double f : found.found_qubit_freqs) {
        bool witnessed = false;
        for (const auto& entry : found.scan_log)
            if (entry.laser == 'q' && entry.pulse_applied &&
                std::abs(entry.frequency_hz - f) <= model.homogeneous_linewidth_hz)
                witnessed = true;
        REQUIRE(witnessed);
    }
    REQUIRE_FALSE(found.scan_log.empty());
    for (std::size_t i = 1; i < found.scan_log.size(); ++i)
        REQUIRE(found.scan_log[i].step > found.scan_log[i - 1].step);
}

TEST_CASE("the Ce-like preset cannot be trapped") {
    const auto m = ce_readout_preset();
    REQUIRE(m.trap_probability_per_cycle == 0.0);
    REQUIRE(m.emission_interval_s == Catch::Approx(2.0e-8));
    REQUIRE(m.homogeneous_linewidth_hz == Catch::Approx(5.0e7));
}
