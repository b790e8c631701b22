#include "support.hpp"

#include "ccclab/model.hpp"

#include <set>

using namespace ccclab;
using testing::max_abs;

TEST_CASE("two-site hopping matrix") {
    const Operator h = build_hamiltonian(LatticeSpec::chain(2), DisorderSpec{});
    Operator expect(2, 2);
    expect << 0.0, -1.0, -1.0, 0.0;
    CHECK(max_abs(h - expect) == 0.0);
}

TEST_CASE("uniform disorder stays in range and keeps the hopping") {
    const auto lat = LatticeSpec::chain(3);
    const Operator h = build_hamiltonian(lat, DisorderSpec::uniform(2.0, 99));
    for (int i = 0; i < 3; ++i) {
        CHECK(h(i, i).real() >= -1.0);
        CHECK(h(i, i).real() <= 1.0);
    }
    CHECK(h(0, 1) == Complex(-1.0, 0.0));
    CHECK(h(1, 2) == Complex(-1.0, 0.0));
    CHECK(h(0, 2) == Complex(0.0, 0.0));
}

TEST_CASE("bernoulli disorder takes two values") {
    const auto v = disorder_potential(LatticeSpec::chain(200), DisorderSpec::bernoulli(3.0, 0.3, 5));
    std::set<double> values(v.data(), v.data() + v.size());
    CHECK(values == std::set<double>{-1.5, 1.5});
}

TEST_CASE("disorder is a pure function of seed and index") {
    const auto lat = LatticeSpec::chain(50);
    const auto a = disorder_potential(lat, DisorderSpec::uniform(4.0, 11, 3));
    const auto b = disorder_potential(lat, DisorderSpec::uniform(4.0, 11, 3));
    const auto c = disorder_potential(lat, DisorderSpec::uniform(4.0, 11, 4));
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
    CHECK(realization_seed(11, 3) != realization_seed(11, 4));
    CHECK(realization_seed(11, 3) != realization_seed(12, 3));
}

TEST_CASE("plaquette holonomy of the flux lattice") {
    const auto lat = LatticeSpec::square(3, 3, Boundary::periodic, 1.0, 1.0 / 3.0);
    const Operator h = build_hamiltonian(lat, DisorderSpec{});
    const Complex expect = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) CHECK(std::abs(plaquette_holonomy(h, lat, x, y) - expect) < 1e-12);
    CHECK(hermiticity_defect(h) < 1e-15);
}

TEST_CASE("flux incompatible with a periodic y axis is rejected") {
    const auto lat = LatticeSpec::square(3, 4, Boundary::periodic, 1.0, 1.0 / 3.0);
    CHECK_THROWS_AS(lat.validate(), std::invalid_argument);
}

TEST_CASE("centred position operators") {
    const Operator x2 = position_operator(LatticeSpec::chain(2), 0);
    CHECK(x2(0, 0).real() == -0.5);
    CHECK(x2(1, 1).real() == 0.5);
    const auto x3 = site_coordinates(LatticeSpec::chain(3), 0);
    CHECK(x3(0) == -1.0);
    CHECK(x3(1) == 0.0);
    CHECK(x3(2) == 1.0);
    const auto lat = LatticeSpec::square(2, 2);
    const auto y = site_coordinates(lat, 1);
    CHECK(y(0) == -0.5);
    CHECK(y(1) == -0.5);
    CHECK(y(2) == 0.5);
    CHECK(y(3) == 0.5);
}

TEST_CASE("two-site velocity from the commutator") {
    const auto lat = LatticeSpec::chain(2);
    const Operator h = build_hamiltonian(lat, DisorderSpec{});
    const Operator v = velocity_operator(h, lat, 0);
    Operator expect(2, 2);
    expect << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
    CHECK(max_abs(v - expect) < 1e-15);
    // the same thing as i[H, x]
    const Operator x = position_operator(lat, 0);
    CHECK(max_abs(v - Complex(0.0, 1.0) * (h * x - x * h)) < 1e-15);
}

TEST_CASE("velocity vanishes without hopping and ignores energy shifts") {
    const auto lat = LatticeSpec::chain(6, Boundary::open, 0.0);
    CHECK(max_abs(velocity_operator(build_hamiltonian(lat, DisorderSpec::uniform(3.0, 1)), lat, 0)) == 0.0);

    const auto open = LatticeSpec::chain(6);
    const Operator h = build_hamiltonian(open, DisorderSpec::uniform(3.0, 1));
    const Operator shifted = h + 2.5 * Operator::Identity(6, 6);
    CHECK(max_abs(velocity_operator(h, open, 0) - velocity_operator(shifted, open, 0)) == 0.0);
}

TEST_CASE("periodic velocity uses the minimal image across the seam") {
    const auto lat = LatticeSpec::chain(4, Boundary::periodic);
    const Operator h = build_hamiltonian(lat, DisorderSpec{});
    const Operator v = velocity_operator(h, lat, 0);
    // bond 3 -> 0 is a +1 step, just like 0 -> 1
    CHECK(std::abs(v(3, 0) - v(0, 1)) < 1e-15);
    CHECK(hermiticity_defect(v) < 1e-15);
}

TEST_CASE("capacity limit") {
    SolverLimits limits;
    limits.max_dimension = 10;
    CHECK_THROWS_AS(build_hamiltonian(LatticeSpec::chain(11), DisorderSpec{}, limits), CapacityError);
}

TEST_CASE("norm bound dominates every realization") {
    const auto lat = LatticeSpec::square(5, 4, Boundary::open, 1.0, 0.2);
    const auto dis = DisorderSpec::uniform(3.0, 8);
    const Operator h = build_hamiltonian(lat, dis);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().cwiseAbs().maxCoeff() <= spectral_radius_bound(lat, dis));
}
