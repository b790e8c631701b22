#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ccclab {

using Complex = std::complex<double>;

/// Dense operator over the site basis of a finite lattice.
using Operator = Eigen::MatrixXcd;

/// Raised when a requested system exceeds the configured dense-solver cap.
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a computed object breaks one of its hard invariants.
class InvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Boundary { open, periodic };

/// Finite box of Z^d (d = 1 or 2) with nearest-neighbour hopping.
///
/// Sites are indexed row-major with axis 0 fastest: s = x + L_0 * y.
/// A uniform magnetic flux (in flux quanta per plaquette) enters as Peierls
/// phases on the axis-0 bonds in Landau gauge; it is ignored for d = 1.
struct LatticeSpec {
    int dimension = 1;
    std::array<int, 2> sides{2, 1};
    std::array<Boundary, 2> boundary{Boundary::open, Boundary::open};
    double hopping = 1.0;
    double flux = 0.0;

    static LatticeSpec chain(int length, Boundary bc = Boundary::open, double hopping = 1.0);
    static LatticeSpec square(int lx, int ly, Boundary bc = Boundary::open, double hopping = 1.0,
                              double flux = 0.0);

    /// Throws std::invalid_argument on inconsistent geometry.
    void validate() const;

    std::size_t site_count() const;
    int side(int axis) const { return sides[static_cast<std::size_t>(axis)]; }
    bool periodic(int axis) const { return boundary[static_cast<std::size_t>(axis)] == Boundary::periodic; }
    bool all_open() const;
    double effective_flux() const { return dimension == 2 ? flux : 0.0; }

    std::array<int, 2> coordinates(std::size_t site) const;
    std::size_t site_index(int x, int y = 0) const;

    /// Coordinate of a site along an axis, centred on the lattice midpoint.
    double centered_coordinate(std::size_t site, int axis) const;

    /// Displacement x_axis(to) - x_axis(from); minimal image on periodic axes.
    double displacement(std::size_t from, std::size_t to, int axis) const;

    std::string describe() const;
};

enum class DisorderKind { none, uniform, bernoulli };

/// Single-site random potential law plus the seed that fixes one realization.
///
/// uniform: i.i.d. on [-W/2, W/2]. bernoulli: +W/2 with probability p, -W/2 otherwise.
struct DisorderSpec {
    DisorderKind kind = DisorderKind::none;
    double strength = 0.0;
    double probability = 0.5;
    std::uint64_t master_seed = 0;
    std::uint64_t realization = 0;

    static DisorderSpec uniform(double w, std::uint64_t seed = 0, std::uint64_t index = 0);
    static DisorderSpec bernoulli(double w, double p, std::uint64_t seed = 0, std::uint64_t index = 0);

    void validate() const;

    /// Sup of the single-site density (1/W for uniform, infinite for atomic laws).
    double density_bound() const;

    /// Largest possible |V(x)|.
    double max_amplitude() const;

    DisorderSpec with_realization(std::uint64_t index) const;
    std::string describe() const;
};

std::string to_string(Boundary bc);
std::string to_string(DisorderKind kind);
Boundary parse_boundary(const std::string& text);
DisorderKind parse_disorder_kind(const std::string& text);

/// Per-realization seed derived from (master_seed, realization_index).
std::uint64_t realization_seed(std::uint64_t master_seed, std::uint64_t realization_index);

struct SolverLimits {
    std::size_t max_dimension = 4096;
};

/// Random potential of one realization. Bit-identical for identical
/// (lattice, master_seed, realization) regardless of calling thread.
Eigen::VectorXd disorder_potential(const LatticeSpec& lattice, const DisorderSpec& disorder);

/// H = hopping part + diag(V). Throws CapacityError above limits.max_dimension.
Operator build_hamiltonian(const LatticeSpec& lattice, const DisorderSpec& disorder,
                           const SolverLimits& limits = {});

/// Real diagonal matrix of centred site coordinates along `axis` (0-based).
Operator position_operator(const LatticeSpec& lattice, int axis);

/// Centred coordinates as a vector (diagonal of position_operator).
Eigen::VectorXd site_coordinates(const LatticeSpec& lattice, int axis);

/// Bond-wise velocity v = i[H, x_axis]: v_ij = i H_ij (x_j - x_i), with the
/// minimal-image displacement on periodic axes.
Operator velocity_operator(const Operator& hamiltonian, const LatticeSpec& lattice, int axis);

/// max_ij |A_ij - conj(A_ji)|.
double hermiticity_defect(const Operator& a);

/// Product of normalised hopping phases H(b,a)/(-t) around the plaquette with
/// lower-left corner (x, y), traversed counter-clockwise.
Complex plaquette_holonomy(const Operator& hamiltonian, const LatticeSpec& lattice, int x, int y);

/// Upper bound on ||H|| valid for every realization of the model.
double spectral_radius_bound(const LatticeSpec& lattice, const DisorderSpec& disorder);

/// True if every entry has zero imaginary part.
bool is_real(const Operator& a);

}  // namespace ccclab
