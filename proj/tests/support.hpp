#pragma once

#include "ccclab/realization.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

namespace testing {

using namespace ccclab;

inline Realization two_site() { return Realization::build(LatticeSpec::chain(2), DisorderSpec{}); }

inline Realization ring(int n) { return Realization::build(LatticeSpec::chain(n, Boundary::periodic), DisorderSpec{}); }

inline Realization disordered_chain(int n, double w, std::uint64_t seed, std::uint64_t index = 0) {
    return Realization::build(LatticeSpec::chain(n), DisorderSpec::uniform(w, seed, index));
}

inline Realization frozen_chain(int n, double w, std::uint64_t seed) {
    return Realization::build(LatticeSpec::chain(n, Boundary::open, 0.0), DisorderSpec::uniform(w, seed));
}

/// Cauchy distribution density of width eta (the Lorentzian delta).
inline double lorentz(double x, double eta) { return eta / std::numbers::pi / (x * x + eta * eta); }

inline double max_abs(const Eigen::MatrixXcd& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace testing
