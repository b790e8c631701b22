#include "ccclab/realization.hpp"

#include <fmt/format.h>

#include <stdexcept>

namespace ccclab {

Eigen::MatrixXcd velocity_matrix_elements(const EigenSystem& es, const Operator& velocity) {
    if (!es.has_vectors()) throw std::invalid_argument("velocity matrix elements need eigenvectors");
    if (velocity.rows() != es.size() || velocity.cols() != es.size())
        throw std::invalid_argument("velocity and eigensystem dimensions differ");
    // real eigenvectors and an imaginary velocity (real H): stay in real arithmetic
    if (es.vectors.imag().isZero(0.0) && velocity.real().isZero(0.0)) {
        const Eigen::MatrixXd u = es.vectors.real();
        const Eigen::MatrixXd w = u.transpose() * velocity.imag() * u;
        return Complex(0.0, 1.0) * w.cast<Complex>();
    }
    return es.vectors.adjoint() * velocity * es.vectors;
}

Realization Realization::build(const LatticeSpec& lattice, const DisorderSpec& disorder,
                               const SolverLimits& limits, SolveMode mode) {
    Operator h = build_hamiltonian(lattice, disorder, limits);
    EigenSystem es = diagonalize(h, mode);
    return assemble(lattice, disorder, std::move(h), std::move(es));
}

Realization Realization::assemble(const LatticeSpec& lattice, const DisorderSpec& disorder,
                                  Operator hamiltonian, EigenSystem eig) {
    Realization r;
    r.lattice = lattice;
    r.disorder = disorder;
    r.hamiltonian = std::move(hamiltonian);
    r.eig = std::move(eig);
    r.eig.lattice = lattice;
    r.eig.disorder = disorder;
    if (r.eig.has_vectors()) {
        for (int a = 0; a < lattice.dimension; ++a)
            r.velocity_eigen.push_back(velocity_matrix_elements(r.eig, r.velocity(a)));
    }
    return r;
}

Eigen::MatrixXcd Realization::position_eigen(int axis) const {
    if (lattice.periodic(axis))
        throw std::invalid_argument(fmt::format("position is ill-defined on periodic axis {}", axis + 1));
    const Eigen::VectorXd x = site_coordinates(lattice, axis);
    return eig.vectors.adjoint() * x.cast<Complex>().asDiagonal() * eig.vectors;
}

}  // namespace ccclab
