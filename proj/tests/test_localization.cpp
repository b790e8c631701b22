#include "support.hpp"

#include "ccclab/ccc.hpp"
#include "ccclab/localization.hpp"

#include <random>

using namespace ccclab;

namespace {
const EnergyInterval ground = EnergyInterval::half_open(-1.5, -0.5);
}

TEST_CASE("two-site localization length by three routes") {
    const auto r = testing::two_site();
    const auto s = loc_length_spectral(r, ground, 0);
    CHECK(s.ell2 == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(s.excluded == 0.0);
    CHECK(loc_length_moment(r, ground, 0) == doctest::Approx(0.25).epsilon(1e-14));
    const auto t = loc_length_time_average(r, ground, 0, {1000.0});
    CHECK(std::abs(t[0] - 0.25) <= 1e-3);
}

TEST_CASE("two-site time route against its closed form") {
    const auto r = testing::two_site();
    const std::vector<double> horizons{0.5, 3.7, 20.0};
    const auto t = loc_length_time_average(r, ground, 0, horizons);
    for (std::size_t k = 0; k < horizons.size(); ++k) {
        const double T = horizons[k];
        CHECK(t[k] == doctest::Approx(0.25 * (1.0 - std::sin(2.0 * T) / (2.0 * T))).epsilon(1e-12));
    }
}

TEST_CASE("localization length edge cases") {
    const auto r = testing::two_site();
    const auto away = EnergyInterval::half_open(4.0, 5.0);
    CHECK(loc_length_spectral(r, away, 0).ell2 == 0.0);
    CHECK(loc_length_moment(r, away, 0) == 0.0);

    const auto frozen = testing::frozen_chain(6, 2.0, 3);
    CHECK(loc_length_spectral(frozen, EnergyInterval::everything(), 0).ell2 == 0.0);
    CHECK(loc_length_moment(frozen, EnergyInterval::everything(), 0) == 0.0);
    for (const double v : loc_length_time_average(frozen, EnergyInterval::everything(), 0, {1.0, 10.0})) CHECK(v == 0.0);

    const auto one = Realization::build(LatticeSpec::chain(1), DisorderSpec{});
    CHECK(loc_length_moment(one, EnergyInterval::everything(), 0) == 0.0);

    CHECK_THROWS_AS(loc_length_moment(testing::ring(6), EnergyInterval::everything(), 0), std::invalid_argument);
}

TEST_CASE("spectral and moment routes agree") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> e(-3.0, 2.0), w(0.1, 1.5);
    for (std::uint64_t k = 0; k < 5; ++k) {
        const auto r = testing::disordered_chain(64, 2.0, 77, k);
        const double a = e(rng);
        const auto win = EnergyInterval::half_open(a, a + w(rng));
        const auto s = loc_length_spectral(r, win, 0);
        const double m = loc_length_moment(r, win, 0);
        CHECK(std::abs(s.ell2 + s.excluded - m) <= 1e-9 * std::max(1.0, m));
    }
}

TEST_CASE("degenerate pairs are carried by the excluded term") {
    const auto r = Realization::build(LatticeSpec::square(4, 4), DisorderSpec{});
    const auto win = EnergyInterval::half_open(-0.5, 0.5);
    const auto s = loc_length_spectral(r, win, 0);
    CHECK(s.excluded > 0.0);
    CHECK(s.ell2 + s.excluded == doctest::Approx(loc_length_moment(r, win, 0)).epsilon(1e-10));
}

TEST_CASE("ccc bound ratio") {
    const auto r = testing::two_site();
    CHECK(ccc_loc_bound(r, ground, 0) == 0.0);
    // whole spectrum: M = 1, |D| = 2.5, l^2 = (2/2)(1/4 + 1/4)
    const auto all = EnergyInterval::half_open(-1.25, 1.25);
    const double ratio = ccc_loc_bound(r, all, 0);
    CHECK(ratio == doctest::Approx(1.0 / (2.5 * 2.5 * 0.5)).epsilon(1e-13));
    CHECK(ratio <= 1.0);
}

TEST_CASE("bound sweep and vanishing chain on a localized chain") {
    BoundSweep sweep({0.1, 0.5, 2.0}, 0.1);
    VanishingAccumulator vanish(0.0, geometric_ladder(1.0, 6));
    for (std::uint64_t k = 0; k < 4; ++k) {
        const auto r = testing::disordered_chain(96, 4.0, 19, k);
        sweep.add(r);
        vanish.add(r);
    }
    CHECK(sweep.intervals() > 0);
    CHECK(sweep.max_ratio() <= 1.0 + 1e-9);
    const auto rep = vanish.result();
    CHECK(rep.holds());
    CHECK(rep.realizations == 4);

    const auto frozen = testing::frozen_chain(10, 2.0, 1);
    VanishingAccumulator none(0.0, geometric_ladder(1.0, 3));
    none.add(frozen);
    for (const auto& rung : none.result().rungs) {
        CHECK(rung.scaled_measure == 0.0);
        CHECK(rung.ell2 == 0.0);
    }
    VanishingAccumulator periodic(0.0, geometric_ladder(1.0, 3));
    CHECK_THROWS_AS(periodic.add(testing::ring(8)), std::invalid_argument);
    CHECK_THROWS_AS(VanishingAccumulator(0.0, {1.0}), std::invalid_argument);
}

TEST_CASE("localization report routes") {
    const auto r = Realization::build(LatticeSpec::square(5, 4), DisorderSpec::uniform(3.0, 2));
    const auto rep = localization_report(r, EnergyInterval::half_open(-1.0, 0.5), {10.0, 100.0});
    CHECK(rep.route_gap <= 1e-9);
    CHECK(rep.ell2_moment.size() == 2);
    CHECK(rep.ell2_time.size() == 2);
    for (const double b : rep.bound_ratio) CHECK(b <= 1.0 + 1e-9);
}
