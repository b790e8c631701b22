#include "ccclab/spectral.hpp"

#include "ccclab/hash.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ccclab {

EnergyInterval EnergyInterval::half_open(double a, double b) {
    if (!(a < b)) throw std::invalid_argument(fmt::format("energy interval needs a < b, got [{}, {})", a, b));
    return {a, b, false};
}

EnergyInterval EnergyInterval::up_to(double e_fermi) {
    return {-std::numeric_limits<double>::infinity(), e_fermi, true};
}

EnergyInterval EnergyInterval::everything() {
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), true};
}

std::pair<Eigen::Index, Eigen::Index> EigenSystem::level_range(const EnergyInterval& interval) const {
    const double* begin = values.data();
    const double* end = begin + values.size();
    const double* first = std::lower_bound(begin, end, interval.lower);
    const double* last = interval.upper_closed ? std::upper_bound(first, end, interval.upper)
                                               : std::lower_bound(first, end, interval.upper);
    return {first - begin, last - begin};
}

Eigen::Index EigenSystem::level_count(const EnergyInterval& interval) const {
    const auto [first, last] = level_range(interval);
    return last - first;
}

std::string matrix_fingerprint(const Operator& h) {
    const auto* bytes = reinterpret_cast<const std::byte*>(h.data());
    const auto size = static_cast<std::size_t>(h.size()) * sizeof(Complex);
    return fmt::format("{}x{} sha256:{}", h.rows(), h.cols(), sha256_hex({bytes, size}).substr(0, 16));
}

EigenSystem diagonalize(const Operator& h, SolveMode mode) {
    if (h.rows() != h.cols() || h.rows() == 0)
        throw std::invalid_argument("diagonalize needs a non-empty square matrix");
    const int options = mode == SolveMode::values_and_vectors ? Eigen::ComputeEigenvectors
                                                              : Eigen::EigenvaluesOnly;
    EigenSystem es;
    Eigen::ComputationInfo info = Eigen::Success;
    if (is_real(h)) {
        const Eigen::MatrixXd real_part = h.real();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(real_part, options);
        info = solver.info();
        if (info == Eigen::Success) {
            es.values = solver.eigenvalues();
            if (mode == SolveMode::values_and_vectors) es.vectors = solver.eigenvectors().cast<Complex>();
        }
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, options);
        info = solver.info();
        if (info == Eigen::Success) {
            es.values = solver.eigenvalues();
            if (mode == SolveMode::values_and_vectors) es.vectors = solver.eigenvectors();
        }
    }
    if (info != Eigen::Success)
        throw InvariantViolation("eigensolver did not converge for matrix " + matrix_fingerprint(h));
    es.operator_norm = std::max(std::abs(es.values(0)), std::abs(es.values(es.values.size() - 1)));
    return es;
}

EigenCheck check_eigensystem(const Operator& h, const EigenSystem& es) {
    EigenCheck check;
    for (Eigen::Index i = 1; i < es.values.size(); ++i)
        if (es.values(i) < es.values(i - 1)) check.ascending = false;
    if (!es.has_vectors()) return check;
    const Eigen::MatrixXcd residual = h * es.vectors - es.vectors * es.values.cast<Complex>().asDiagonal();
    check.residual = residual.colwise().norm().maxCoeff() / std::max(es.operator_norm, 1.0);
    const auto n = es.vectors.cols();
    check.orthogonality =
        (es.vectors.adjoint() * es.vectors - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
    return check;
}

Operator spectral_projector(const EigenSystem& es, const EnergyInterval& interval) {
    if (!es.has_vectors()) throw std::invalid_argument("spectral_projector needs eigenvectors");
    const auto [first, last] = es.level_range(interval);
    const auto n = es.size();
    if (last == first) return Operator::Zero(n, n);
    const auto block = es.vectors.middleCols(first, last - first);
    return block * block.adjoint();
}

double fermi_weight(double energy, double e_fermi, double temperature) {
    if (temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
    if (temperature == 0.0) return energy <= e_fermi ? 1.0 : 0.0;
    const double x = (energy - e_fermi) / temperature;
    if (x > 0.0) {
        const double ex = std::exp(-x);
        return ex / (1.0 + ex);
    }
    return 1.0 / (1.0 + std::exp(x));
}

double fermi_derivative(double energy, double e_fermi, double temperature) {
    if (temperature == 0.0) return 0.0;
    const double half = 0.5 * (energy - e_fermi) / temperature;
    if (std::abs(half) > 350.0) return 0.0;
    const double c = std::cosh(half);
    return -1.0 / (4.0 * temperature * c * c);
}

double fermi_quotient(double e1, double e2, double e_fermi, double temperature, double degeneracy_tol) {
    const double gap = e1 - e2;
    if (std::abs(gap) <= degeneracy_tol) return fermi_derivative(0.5 * (e1 + e2), e_fermi, temperature);
    if (temperature == 0.0) return (fermi_weight(e1, e_fermi, 0.0) - fermi_weight(e2, e_fermi, 0.0)) / gap;

    const double a = (e1 - e_fermi) / temperature;
    const double b = (e2 - e_fermi) / temperature;
    double difference = 0.0;
    if (std::max(std::abs(a), std::abs(b)) < 600.0) {
        // n(a) - n(b) = sinh((b - a)/2) / (2 cosh(a/2) cosh(b/2))
        difference = std::sinh(0.5 * (b - a)) / (2.0 * std::cosh(0.5 * a) * std::cosh(0.5 * b));
    } else {
        difference = fermi_weight(e1, e_fermi, temperature) - fermi_weight(e2, e_fermi, temperature);
    }
    return difference / gap;
}

Operator fermi_projector(const EigenSystem& es, double e_fermi) {
    return spectral_projector(es, EnergyInterval::up_to(e_fermi));
}

Operator heisenberg_evolve(const EigenSystem& es, const Operator& a, double time) {
    if (!es.has_vectors()) throw std::invalid_argument("heisenberg_evolve needs eigenvectors");
    if (a.rows() != es.size() || a.cols() != es.size())
        throw std::invalid_argument("operator and eigensystem dimensions differ");
    Eigen::MatrixXcd in_eigenbasis = es.vectors.adjoint() * a * es.vectors;
    const auto n = es.size();
    for (Eigen::Index m = 0; m < n; ++m)
        for (Eigen::Index k = 0; k < n; ++k)
            in_eigenbasis(k, m) *= std::polar(1.0, -(es.values(k) - es.values(m)) * time);
    return es.vectors * in_eigenbasis * es.vectors.adjoint();
}

TraceWindow TraceWindow::central(const LatticeSpec& lattice, double fraction) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw std::invalid_argument(fmt::format("trace window fraction must lie in (0, 1], got {}", fraction));
    TraceWindow w;
    w.fraction_ = fraction;
    w.lattice_sites_ = lattice.site_count();

    std::array<int, 2> lo{0, 0};
    std::array<int, 2> hi{1, 1};
    for (int a = 0; a < lattice.dimension; ++a) {
        const int l = lattice.side(a);
        const int m = std::clamp(static_cast<int>(std::lround(fraction * l)), 1, l);
        lo[static_cast<std::size_t>(a)] = (l - m) / 2;
        hi[static_cast<std::size_t>(a)] = lo[static_cast<std::size_t>(a)] + m;
    }
    for (int y = lo[1]; y < hi[1]; ++y)
        for (int x = lo[0]; x < hi[0]; ++x)
            w.sites_.push_back(static_cast<Eigen::Index>(lattice.site_index(x, y)));
    return w;
}

Complex trace_per_volume_complex(const Operator& a, const TraceWindow& window) {
    if (a.rows() != a.cols()) throw std::invalid_argument("trace of a non-square operator");
    if (static_cast<std::size_t>(a.rows()) != window.lattice_sites())
        throw std::invalid_argument("trace window does not match the operator dimension");
    Complex sum(0.0, 0.0);
    for (const auto s : window.sites()) sum += a(s, s);
    return sum / static_cast<double>(window.size());
}

double trace_per_volume(const Operator& a, const TraceWindow& window) {
    const Complex t = trace_per_volume_complex(a, window);
    if (std::abs(t.imag()) > 1e-10 * std::max(1.0, std::abs(t.real())))
        throw InvariantViolation(fmt::format("trace per volume has imaginary part {:.3e}", t.imag()));
    return t.real();
}

EnergyGrid EnergyGrid::uniform(double lower, double upper, int bins) {
    if (!(lower < upper) || bins < 1) throw std::invalid_argument("energy grid needs lower < upper and bins >= 1");
    return {lower, upper, bins};
}

int EnergyGrid::bin_of(double e) const {
    if (!(e >= lower) || !(e < upper)) return -1;
    const int b = static_cast<int>((e - lower) / bin_width());
    return std::min(b, bins - 1);
}

DensityOfStates dos_ids(std::span<const Eigen::VectorXd> spectra, const EnergyGrid& grid) {
    if (spectra.empty()) throw std::invalid_argument("dos_ids needs at least one realization");
    DensityOfStates out;
    out.grid = grid;
    out.realizations = spectra.size();
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(grid.bins);
    double weight_total = 0.0;
    for (const auto& spectrum : spectra) {
        const double per_level = 1.0 / static_cast<double>(spectrum.size());
        weight_total += 1.0;
        for (const double e : spectrum) {
            const int b = grid.bin_of(e);
            if (b >= 0)
                counts(b) += per_level;
            else if (e < grid.lower)
                ++out.below;
            else
                ++out.above;
        }
    }
    counts /= weight_total;
    out.density = counts / grid.bin_width();

    double below_weight = 0.0;
    for (const auto& spectrum : spectra)
        for (const double e : spectrum)
            if (e < grid.lower) below_weight += 1.0 / static_cast<double>(spectrum.size());
    below_weight /= weight_total;

    out.integrated.resize(grid.bins);
    double running = below_weight;
    for (int b = 0; b < grid.bins; ++b) {
        running += counts(b);
        out.integrated(b) = running;
    }
    return out;
}

void IntegratedDensity::add(const Eigen::VectorXd& spectrum) {
    pool_.insert(pool_.end(), spectrum.data(), spectrum.data() + spectrum.size());
    sorted_ = false;
}

void IntegratedDensity::merge(const IntegratedDensity& other) {
    pool_.insert(pool_.end(), other.pool_.begin(), other.pool_.end());
    sorted_ = false;
}

void IntegratedDensity::finalize() {
    std::sort(pool_.begin(), pool_.end());
    sorted_ = true;
}

double IntegratedDensity::at(double energy) const {
    if (!sorted_) throw std::logic_error("IntegratedDensity::finalize() must precede queries");
    if (pool_.empty()) return 0.0;
    const auto it = std::upper_bound(pool_.begin(), pool_.end(), energy);
    return static_cast<double>(it - pool_.begin()) / static_cast<double>(pool_.size());
}

}  // namespace ccclab
