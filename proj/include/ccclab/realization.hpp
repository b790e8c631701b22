#pragma once

#include "ccclab/model.hpp"
#include "ccclab/spectral.hpp"

#include <vector>

namespace ccclab {

/// One disorder realization with everything the eigenbasis formulas need:
/// the Hamiltonian, its eigensystem and the velocity matrix elements
/// U^dag v_alpha U for every axis.
struct Realization {
    LatticeSpec lattice;
    DisorderSpec disorder;
    Operator hamiltonian;
    EigenSystem eig;
    std::vector<Eigen::MatrixXcd> velocity_eigen;

    /// Builds H, diagonalizes and transforms the velocities.
    /// With SolveMode::values_only the velocities are left empty.
    static Realization build(const LatticeSpec& lattice, const DisorderSpec& disorder,
                             const SolverLimits& limits = {},
                             SolveMode mode = SolveMode::values_and_vectors);

    /// Completes a realization from an already computed eigensystem.
    static Realization assemble(const LatticeSpec& lattice, const DisorderSpec& disorder,
                                Operator hamiltonian, EigenSystem eig);

    int dimension() const { return lattice.dimension; }
    Eigen::Index size() const { return eig.size(); }
    double site_count() const { return static_cast<double>(eig.size()); }

    /// Site-basis velocity along `axis`.
    Operator velocity(int axis) const { return velocity_operator(hamiltonian, lattice, axis); }

    /// U^dag x_axis U (position in the eigenbasis); open axes only.
    Eigen::MatrixXcd position_eigen(int axis) const;
};

/// U^dag v U.
Eigen::MatrixXcd velocity_matrix_elements(const EigenSystem& es, const Operator& velocity);

}  // namespace ccclab
