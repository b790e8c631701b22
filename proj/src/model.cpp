#include "ccclab/model.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace ccclab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// 53-bit mantissa draw in [0, 1); independent of the standard library's
// distribution implementation.
double unit_draw(std::mt19937_64& engine) {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace

LatticeSpec LatticeSpec::chain(int length, Boundary bc, double hopping) {
    LatticeSpec spec;
    spec.dimension = 1;
    spec.sides = {length, 1};
    spec.boundary = {bc, Boundary::open};
    spec.hopping = hopping;
    return spec;
}

LatticeSpec LatticeSpec::square(int lx, int ly, Boundary bc, double hopping, double flux) {
    LatticeSpec spec;
    spec.dimension = 2;
    spec.sides = {lx, ly};
    spec.boundary = {bc, bc};
    spec.hopping = hopping;
    spec.flux = flux;
    return spec;
}

void LatticeSpec::validate() const {
    if (dimension != 1 && dimension != 2)
        throw std::invalid_argument(fmt::format("lattice dimension must be 1 or 2, got {}", dimension));
    for (int a = 0; a < dimension; ++a) {
        if (side(a) < 1)
            throw std::invalid_argument(fmt::format("side length along axis {} must be >= 1", a + 1));
        if (periodic(a) && side(a) < 3)
            throw std::invalid_argument(fmt::format("periodic axis {} needs at least 3 sites", a + 1));
    }
    if (!std::isfinite(hopping) || !std::isfinite(flux))
        throw std::invalid_argument("hopping and flux must be finite");
    if (dimension == 2 && flux != 0.0 && periodic(1)) {
        const double winding = flux * side(1);
        if (std::abs(winding - std::round(winding)) > 1e-12)
            throw std::invalid_argument(
                "flux * L_2 must be an integer when axis 2 is periodic (Landau gauge seam)");
    }
}

std::size_t LatticeSpec::site_count() const {
    std::size_t n = 1;
    for (int a = 0; a < dimension; ++a) n *= static_cast<std::size_t>(side(a));
    return n;
}

bool LatticeSpec::all_open() const {
    for (int a = 0; a < dimension; ++a)
        if (periodic(a)) return false;
    return true;
}

std::array<int, 2> LatticeSpec::coordinates(std::size_t site) const {
    const auto lx = static_cast<std::size_t>(sides[0]);
    if (dimension == 1) return {static_cast<int>(site), 0};
    return {static_cast<int>(site % lx), static_cast<int>(site / lx)};
}

std::size_t LatticeSpec::site_index(int x, int y) const {
    return static_cast<std::size_t>(x) + static_cast<std::size_t>(sides[0]) * static_cast<std::size_t>(y);
}

double LatticeSpec::centered_coordinate(std::size_t site, int axis) const {
    const auto c = coordinates(site);
    return c[static_cast<std::size_t>(axis)] - 0.5 * (side(axis) - 1);
}

double LatticeSpec::displacement(std::size_t from, std::size_t to, int axis) const {
    const auto a = coordinates(from)[static_cast<std::size_t>(axis)];
    const auto b = coordinates(to)[static_cast<std::size_t>(axis)];
    int d = b - a;
    if (periodic(axis)) {
        const int l = side(axis);
        d = ((d % l) + l) % l;
        if (2 * d > l) d -= l;
    }
    return static_cast<double>(d);
}

std::string LatticeSpec::describe() const {
    if (dimension == 1)
        return fmt::format("chain L={} {} t={}", sides[0], to_string(boundary[0]), hopping);
    return fmt::format("square {}x{} {}/{} t={} flux={}", sides[0], sides[1], to_string(boundary[0]),
                       to_string(boundary[1]), hopping, flux);
}

DisorderSpec DisorderSpec::uniform(double w, std::uint64_t seed, std::uint64_t index) {
    DisorderSpec d;
    d.kind = w > 0.0 ? DisorderKind::uniform : DisorderKind::none;
    d.strength = w;
    d.master_seed = seed;
    d.realization = index;
    return d;
}

DisorderSpec DisorderSpec::bernoulli(double w, double p, std::uint64_t seed, std::uint64_t index) {
    DisorderSpec d;
    d.kind = DisorderKind::bernoulli;
    d.strength = w;
    d.probability = p;
    d.master_seed = seed;
    d.realization = index;
    return d;
}

void DisorderSpec::validate() const {
    if (!(strength >= 0.0) || !std::isfinite(strength))
        throw std::invalid_argument("disorder strength W must be finite and >= 0");
    if (kind == DisorderKind::bernoulli && !(probability >= 0.0 && probability <= 1.0))
        throw std::invalid_argument("bernoulli probability must lie in [0, 1]");
}

double DisorderSpec::density_bound() const {
    if (kind == DisorderKind::uniform && strength > 0.0) return 1.0 / strength;
    return std::numeric_limits<double>::infinity();
}

double DisorderSpec::max_amplitude() const {
    return kind == DisorderKind::none ? 0.0 : 0.5 * strength;
}

DisorderSpec DisorderSpec::with_realization(std::uint64_t index) const {
    DisorderSpec d = *this;
    d.realization = index;
    return d;
}

std::string DisorderSpec::describe() const {
    switch (kind) {
    case DisorderKind::none: return "none";
    case DisorderKind::uniform: return fmt::format("uniform W={}", strength);
    case DisorderKind::bernoulli: return fmt::format("bernoulli W={} p={}", strength, probability);
    }
    return "?";
}

std::string to_string(Boundary bc) { return bc == Boundary::open ? "open" : "periodic"; }

std::string to_string(DisorderKind kind) {
    switch (kind) {
    case DisorderKind::none: return "none";
    case DisorderKind::uniform: return "uniform";
    case DisorderKind::bernoulli: return "bernoulli";
    }
    return "?";
}

Boundary parse_boundary(const std::string& text) {
    if (text == "open") return Boundary::open;
    if (text == "periodic") return Boundary::periodic;
    throw std::invalid_argument("unknown boundary condition '" + text + "'");
}

DisorderKind parse_disorder_kind(const std::string& text) {
    if (text == "none") return DisorderKind::none;
    if (text == "uniform") return DisorderKind::uniform;
    if (text == "bernoulli") return DisorderKind::bernoulli;
    throw std::invalid_argument("unknown disorder kind '" + text + "'");
}

std::uint64_t realization_seed(std::uint64_t master_seed, std::uint64_t realization_index) {
    return splitmix64(splitmix64(master_seed) ^ splitmix64(~realization_index));
}

Eigen::VectorXd disorder_potential(const LatticeSpec& lattice, const DisorderSpec& disorder) {
    const auto n = static_cast<Eigen::Index>(lattice.site_count());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    if (disorder.kind == DisorderKind::none || disorder.strength == 0.0) return v;

    std::mt19937_64 engine(realization_seed(disorder.master_seed, disorder.realization));
    const double w = disorder.strength;
    for (Eigen::Index s = 0; s < n; ++s) {
        const double u = unit_draw(engine);
        if (disorder.kind == DisorderKind::uniform)
            v(s) = w * (u - 0.5);
        else
            v(s) = u < disorder.probability ? 0.5 * w : -0.5 * w;
    }
    return v;
}

Operator build_hamiltonian(const LatticeSpec& lattice, const DisorderSpec& disorder,
                           const SolverLimits& limits) {
    lattice.validate();
    disorder.validate();
    const std::size_t n = lattice.site_count();
    if (n > limits.max_dimension)
        throw CapacityError(fmt::format("system of {} sites exceeds the dense-solver cap of {}", n,
                                        limits.max_dimension));

    const auto dim = static_cast<Eigen::Index>(n);
    Operator h = Operator::Zero(dim, dim);
    const double t = lattice.hopping;
    const double phi = lattice.effective_flux();

    const auto link = [&](std::size_t from, std::size_t to, Complex amplitude) {
        // amplitude is the matrix element H(to, from)
        h(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from)) += amplitude;
        h(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to)) += std::conj(amplitude);
    };

    const int lx = lattice.side(0);
    const int ly = lattice.dimension == 2 ? lattice.side(1) : 1;
    for (int y = 0; y < ly; ++y) {
        const double theta = 2.0 * std::numbers::pi * phi * y;
        const Complex x_hop = -t * std::polar(1.0, -theta);
        for (int x = 0; x < lx; ++x) {
            const std::size_t s = lattice.site_index(x, y);
            if (x + 1 < lx)
                link(s, lattice.site_index(x + 1, y), x_hop);
            else if (lattice.periodic(0))
                link(s, lattice.site_index(0, y), x_hop);

            if (lattice.dimension == 2) {
                if (y + 1 < ly)
                    link(s, lattice.site_index(x, y + 1), Complex(-t, 0.0));
                else if (lattice.periodic(1))
                    link(s, lattice.site_index(x, 0), Complex(-t, 0.0));
            }
        }
    }

    const Eigen::VectorXd v = disorder_potential(lattice, disorder);
    for (Eigen::Index s = 0; s < dim; ++s) h(s, s) += v(s);
    return h;
}

Eigen::VectorXd site_coordinates(const LatticeSpec& lattice, int axis) {
    if (axis < 0 || axis >= lattice.dimension)
        throw std::out_of_range(fmt::format("axis {} out of range for a {}-d lattice", axis + 1,
                                            lattice.dimension));
    const auto n = static_cast<Eigen::Index>(lattice.site_count());
    Eigen::VectorXd c(n);
    for (Eigen::Index s = 0; s < n; ++s)
        c(s) = lattice.centered_coordinate(static_cast<std::size_t>(s), axis);
    return c;
}

Operator position_operator(const LatticeSpec& lattice, int axis) {
    return site_coordinates(lattice, axis).cast<Complex>().asDiagonal();
}

Operator velocity_operator(const Operator& hamiltonian, const LatticeSpec& lattice, int axis) {
    const auto n = static_cast<Eigen::Index>(lattice.site_count());
    if (hamiltonian.rows() != n || hamiltonian.cols() != n)
        throw std::invalid_argument(fmt::format("Hamiltonian is {}x{} but the lattice has {} sites",
                                                hamiltonian.rows(), hamiltonian.cols(), n));
    if (axis < 0 || axis >= lattice.dimension)
        throw std::out_of_range(fmt::format("axis {} out of range", axis + 1));

    Operator v = Operator::Zero(n, n);
    const Complex i_unit(0.0, 1.0);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i == j) continue;
            const Complex hij = hamiltonian(i, j);
            if (hij == Complex(0.0, 0.0)) continue;
            const double d = lattice.displacement(static_cast<std::size_t>(i), static_cast<std::size_t>(j), axis);
            if (d != 0.0) v(i, j) = i_unit * hij * d;
        }
    }
    return v;
}

double hermiticity_defect(const Operator& a) {
    if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

Complex plaquette_holonomy(const Operator& hamiltonian, const LatticeSpec& lattice, int x, int y) {
    if (lattice.dimension != 2) throw std::invalid_argument("plaquettes need a 2-d lattice");
    if (lattice.hopping == 0.0) throw std::invalid_argument("holonomy undefined for zero hopping");
    const int lx = lattice.side(0);
    const int ly = lattice.side(1);
    const auto wrap = [](int c, int l) { return ((c % l) + l) % l; };
    const std::size_t a = lattice.site_index(x, y);
    const std::size_t b = lattice.site_index(wrap(x + 1, lx), y);
    const std::size_t c = lattice.site_index(wrap(x + 1, lx), wrap(y + 1, ly));
    const std::size_t d = lattice.site_index(x, wrap(y + 1, ly));
    const auto hop = [&](std::size_t from, std::size_t to) {
        const Complex h = hamiltonian(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from));
        return h / (-lattice.hopping);
    };
    return hop(a, b) * hop(b, c) * hop(c, d) * hop(d, a);
}

double spectral_radius_bound(const LatticeSpec& lattice, const DisorderSpec& disorder) {
    return 2.0 * lattice.dimension * std::abs(lattice.hopping) + disorder.max_amplitude();
}

bool is_real(const Operator& a) {
    return a.imag().cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace ccclab
