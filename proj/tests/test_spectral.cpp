#include "support.hpp"

#include "ccclab/spectral.hpp"

#include <algorithm>
#include <vector>

using namespace ccclab;
using testing::max_abs;

TEST_CASE("two-site eigensystem") {
    const auto r = testing::two_site();
    CHECK(r.eig.values(0) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(r.eig.values(1) == doctest::Approx(1.0).epsilon(1e-15));
    const double s = 1.0 / std::sqrt(2.0);
    // up to a phase per column
    CHECK(std::abs(std::abs(r.eig.vectors(0, 0)) - s) < 1e-15);
    CHECK(std::abs(r.eig.vectors(0, 0) - r.eig.vectors(1, 0)) < 1e-15);
    CHECK(std::abs(r.eig.vectors(0, 1) + r.eig.vectors(1, 1)) < 1e-15);
    CHECK(check_eigensystem(r.hamiltonian, r.eig).ok());
}

TEST_CASE("diagonal input") {
    Operator h = Operator::Zero(2, 2);
    h(0, 0) = -0.3;
    h(1, 1) = 0.7;
    const auto es = diagonalize(h);
    CHECK(es.values(0) == -0.3);
    CHECK(es.values(1) == 0.7);
    CHECK(max_abs(es.vectors.cwiseAbs().cast<Complex>() - Operator::Identity(2, 2)) < 1e-15);
}

TEST_CASE("clean ring of four sites") {
    const auto r = testing::ring(4);
    const std::vector<double> expect{-2.0, 0.0, 0.0, 2.0};
    for (int k = 0; k < 4; ++k) CHECK(std::abs(r.eig.values(k) - expect[static_cast<std::size_t>(k)]) < 1e-14);
}

TEST_CASE("values-only mode leaves the vectors empty") {
    const auto es = diagonalize(build_hamiltonian(LatticeSpec::chain(5), DisorderSpec{}), SolveMode::values_only);
    CHECK(es.size() == 5);
    CHECK_FALSE(es.has_vectors());
}

TEST_CASE("spectral projectors") {
    const auto r = testing::two_site();
    const Operator p = spectral_projector(r.eig, EnergyInterval::half_open(-2.0, 0.0));
    CHECK(max_abs(p - 0.5 * Operator::Ones(2, 2)) < 1e-15);
    CHECK(max_abs(spectral_projector(r.eig, EnergyInterval::everything()) - Operator::Identity(2, 2)) < 1e-15);
    CHECK(max_abs(spectral_projector(r.eig, EnergyInterval::half_open(3.0, 4.0))) == 0.0);
}

TEST_CASE("fermi weights") {
    CHECK(fermi_weight(0.3, 0.3, 0.5) == 0.5);
    CHECK(fermi_weight(0.3, 0.3, 0.0) == 1.0);
    CHECK(fermi_weight(1.0, 0.0, 1.0) == doctest::Approx(1.0 / (1.0 + std::exp(1.0))).epsilon(1e-15));
    CHECK(fermi_weight(1.0 + 1e-12, 1.0, 0.0) == 0.0);
}

TEST_CASE("fermi difference quotient is stable") {
    const double t = 0.2;
    const double e = 0.1;
    const double h = 1e-7;
    const double direct = (fermi_weight(e + h, 0.0, t) - fermi_weight(e, 0.0, t)) / h;
    CHECK(fermi_quotient(e + h, e, 0.0, t, 0.0) == doctest::Approx(direct).epsilon(1e-6));
    CHECK(fermi_quotient(e, e, 0.0, t, 1e-12) == doctest::Approx(fermi_derivative(e, 0.0, t)).epsilon(1e-12));
    CHECK(fermi_quotient(-1.0, 1.0, 0.0, 0.0, 1e-12) == -0.5);
    CHECK(fermi_quotient(0.5, 0.5, 0.0, 0.0, 1e-12) == 0.0);
    // deep in the tails the naive quotient underflows
    CHECK(std::isfinite(fermi_quotient(400.0, 400.0 + 1e-9, 0.0, 1.0, 1e-12)));
}

TEST_CASE("fermi projector") {
    const auto r = testing::two_site();
    CHECK(max_abs(fermi_projector(r.eig, 0.0) - 0.5 * Operator::Ones(2, 2)) < 1e-15);
    CHECK(max_abs(fermi_projector(r.eig, -5.0)) == 0.0);
    CHECK(max_abs(fermi_projector(r.eig, 5.0) - Operator::Identity(2, 2)) < 1e-15);
}

TEST_CASE("heisenberg evolution") {
    const auto r = testing::two_site();
    const Operator x = position_operator(r.lattice, 0);
    CHECK(max_abs(heisenberg_evolve(r.eig, x, 0.0) - x) < 1e-15);
    const Operator p = fermi_projector(r.eig, 0.0);
    CHECK(max_abs(heisenberg_evolve(r.eig, p, 3.3) - p) < 1e-14);

    // <psi_-| |x(t) - x|^2 |psi_-> = (2 - 2 cos 2t) / 4
    const Eigen::VectorXcd g = r.eig.vectors.col(0);
    for (const double t : {0.0, 0.4, 1.3, 2.9}) {
        const Operator d = heisenberg_evolve(r.eig, x, t) - x;
        const double value = (g.adjoint() * d.adjoint() * d * g)(0, 0).real();
        CHECK(value == doctest::Approx(0.25 * (2.0 - 2.0 * std::cos(2.0 * t))).epsilon(1e-13));
    }
}

TEST_CASE("windowed trace per volume") {
    const auto lat = LatticeSpec::chain(10);
    for (const double w : {0.2, 0.5, 1.0})
        CHECK(trace_per_volume(Operator::Identity(10, 10), TraceWindow::central(lat, w)) == doctest::Approx(1.0));
    const auto r = testing::two_site();
    const Operator v = r.velocity(0);
    CHECK(trace_per_volume(v, TraceWindow::full(r.lattice)) == 0.0);
    CHECK(trace_per_volume(v * v, TraceWindow::full(r.lattice)) == doctest::Approx(1.0).epsilon(1e-15));

    const auto win = TraceWindow::central(lat, 0.4);
    CHECK(win.size() == 4);
    CHECK(win.sites().front() == 3);
}

TEST_CASE("density of states support") {
    std::vector<Eigen::VectorXd> spectra;
    spectra.push_back(testing::ring(32).eig.values);
    const auto dos = dos_ids(spectra, EnergyGrid::uniform(-3.0, 3.0, 60));
    for (int b = 0; b < 60; ++b) {
        const double lo = dos.grid.bin_lower(b);
        if (lo + dos.grid.bin_width() <= -2.0 - 1e-9 || lo >= 2.0 + 1e-9) CHECK(dos.density(b) == 0.0);
    }
    CHECK(dos.integrated(59) == doctest::Approx(1.0));
    CHECK(dos.density.sum() * dos.grid.bin_width() == doctest::Approx(1.0));

    spectra.clear();
    for (std::uint64_t k = 0; k < 5; ++k) spectra.push_back(testing::disordered_chain(40, 3.0, 1, k).eig.values);
    for (const auto& s : spectra) {
        CHECK(s.minCoeff() >= -3.5);
        CHECK(s.maxCoeff() <= 3.5);
    }
    CHECK_THROWS_AS(dos_ids(std::span<const Eigen::VectorXd>{}, EnergyGrid::uniform(-1.0, 1.0, 2)),
                    std::invalid_argument);
}

TEST_CASE("integrated density") {
    IntegratedDensity ids;
    ids.add(testing::ring(4).eig.values);
    ids.finalize();
    CHECK(ids.at(10.0) == 1.0);
    CHECK(ids.at(-10.0) == 0.0);
    CHECK(ids.at(1e-9) == doctest::Approx(0.75));
    CHECK(ids.at(-1e-9) == doctest::Approx(0.25));
}
