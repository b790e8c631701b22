#pragma once

#include "ccclab/model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace ccclab {

/// Energy interval [lower, upper), or (lower, upper] when upper_closed is set.
/// lower may be -infinity.
struct EnergyInterval {
    double lower = 0.0;
    double upper = 0.0;
    bool upper_closed = false;

    /// [a, b); throws std::invalid_argument unless a < b.
    static EnergyInterval half_open(double a, double b);
    /// (-inf, e_fermi], the Fermi sea at zero temperature.
    static EnergyInterval up_to(double e_fermi);
    /// The whole real line.
    static EnergyInterval everything();

    bool contains(double e) const { return e >= lower && (upper_closed ? e <= upper : e < upper); }
    double width() const { return upper - lower; }
};

/// Ascending eigenvalues and orthonormal eigenvectors (columns) of one realization.
/// `vectors` is empty when only eigenvalues were requested.
struct EigenSystem {
    Eigen::VectorXd values;
    Eigen::MatrixXcd vectors;
    double operator_norm = 0.0;
    LatticeSpec lattice;
    DisorderSpec disorder;

    Eigen::Index size() const { return values.size(); }
    bool has_vectors() const { return vectors.size() > 0; }

    /// Index range [first, last) of eigenvalues inside the interval.
    std::pair<Eigen::Index, Eigen::Index> level_range(const EnergyInterval& interval) const;
    Eigen::Index level_count(const EnergyInterval& interval) const;

    /// Pairs with |E_n - E_m| <= this are treated as degenerate.
    double degeneracy_tolerance() const { return 1e-9 * operator_norm; }
};

enum class SolveMode { values_and_vectors, values_only };

/// Dense Hermitian eigendecomposition; real inputs go through the real solver.
/// Throws InvariantViolation with a matrix fingerprint if the solver fails.
EigenSystem diagonalize(const Operator& h, SolveMode mode = SolveMode::values_and_vectors);

struct EigenCheck {
    double residual = 0.0;       ///< max_m ||H psi_m - E_m psi_m|| / max(||H||, 1)
    double orthogonality = 0.0;  ///< ||U^dag U - I||_max
    bool ascending = true;
    bool ok(double tol = 1e-10) const { return residual <= tol && orthogonality <= tol && ascending; }
};

EigenCheck check_eigensystem(const Operator& h, const EigenSystem& es);

/// Content hash used in diagnostics for failing matrices.
std::string matrix_fingerprint(const Operator& h);

Operator spectral_projector(const EigenSystem& es, const EnergyInterval& interval);

/// Fermi-Dirac occupation; the T = 0 law is the indicator of E <= E_F.
double fermi_weight(double energy, double e_fermi, double temperature);

/// (n_F(E1) - n_F(E2)) / (E1 - E2), evaluated without cancellation. For
/// |E1 - E2| <= degeneracy_tol the derivative dn_F/dE at the midpoint is
/// returned when T > 0 and 0 when T = 0.
double fermi_quotient(double e1, double e2, double e_fermi, double temperature, double degeneracy_tol);

/// dn_F/dE (zero for T = 0 away from the jump).
double fermi_derivative(double energy, double e_fermi, double temperature);

Operator fermi_projector(const EigenSystem& es, double e_fermi);

/// A(t) = exp(-itH) A exp(itH), via the eigenbasis.
Operator heisenberg_evolve(const EigenSystem& es, const Operator& a, double time);

/// Central sub-box over which site-diagonal traces are averaged.
class TraceWindow {
public:
    /// Central box with side round(fraction * L) (at least 1) along each axis.
    static TraceWindow central(const LatticeSpec& lattice, double fraction);
    static TraceWindow full(const LatticeSpec& lattice) { return central(lattice, 1.0); }

    double fraction() const { return fraction_; }
    const std::vector<Eigen::Index>& sites() const { return sites_; }
    std::size_t size() const { return sites_.size(); }
    std::size_t lattice_sites() const { return lattice_sites_; }
    bool covers_lattice() const { return sites_.size() == lattice_sites_; }

private:
    double fraction_ = 1.0;
    std::size_t lattice_sites_ = 0;
    std::vector<Eigen::Index> sites_;
};

/// (1/|W|) sum_{s in W} A_ss, complex.
Complex trace_per_volume_complex(const Operator& a, const TraceWindow& window);

/// Real part of the windowed trace; throws InvariantViolation if the
/// imaginary part exceeds 1e-10 * max(1, |Re|).
double trace_per_volume(const Operator& a, const TraceWindow& window);

struct EnergyGrid {
    double lower = -1.0;
    double upper = 1.0;
    int bins = 1;

    static EnergyGrid uniform(double lower, double upper, int bins);
    double bin_width() const { return (upper - lower) / bins; }
    double bin_lower(int b) const { return lower + b * bin_width(); }
    /// Bin index or -1 when outside [lower, upper).
    int bin_of(double e) const;
};

/// Ensemble-averaged density of states (per site, per unit energy) and the
/// integrated density N(E) at each bin's upper edge.
struct DensityOfStates {
    EnergyGrid grid;
    Eigen::VectorXd density;
    Eigen::VectorXd integrated;
    std::size_t realizations = 0;
    std::size_t below = 0;
    std::size_t above = 0;
};

/// Throws std::invalid_argument for an empty ensemble.
DensityOfStates dos_ids(std::span<const Eigen::VectorXd> spectra, const EnergyGrid& grid);

/// Pooled eigenvalues of an ensemble, giving N(E) = #{E_k <= E} / total.
class IntegratedDensity {
public:
    void add(const Eigen::VectorXd& spectrum);
    void merge(const IntegratedDensity& other);
    /// Sorts the pool; must be called before queries.
    void finalize();

    double at(double energy) const;
    std::size_t total() const { return pool_.size(); }
    const std::vector<double>& sorted() const { return pool_; }

private:
    std::vector<double> pool_;
    bool sorted_ = false;
};

}  // namespace ccclab
