#include "ccclab/ccc.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ccclab {

namespace {

Complex trace_of_product(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    return a.cwiseProduct(b.transpose()).sum();
}

void require_component(const Realization& r, int axis) {
    if (axis < 0 || axis >= r.dimension())
        throw std::out_of_range(fmt::format("component {} out of range for a {}-d lattice", axis + 1, r.dimension()));
    if (r.velocity_eigen.size() != static_cast<std::size_t>(r.dimension()))
        throw std::invalid_argument("realization carries no eigenbasis velocities");
}

}  // namespace

CccHistogram::CccHistogram(EnergyGrid grid, int alpha, int beta)
    : grid_(grid), alpha_(alpha), beta_(beta) {
    const auto cells = static_cast<std::size_t>(grid_.bins) * static_cast<std::size_t>(grid_.bins);
    mean_.assign(cells, 0.0);
    m2_.assign(cells, 0.0);
    imag_mean_.assign(cells, 0.0);
    touched_.assign(cells, 0);
}

void CccHistogram::add(const Realization& r) {
    require_component(r, alpha_);
    require_component(r, beta_);
    const auto& va = r.velocity_eigen[static_cast<std::size_t>(alpha_)];
    const auto& vb = r.velocity_eigen[static_cast<std::size_t>(beta_)];
    const Eigen::Index n = r.size();
    const double inv_n = 1.0 / r.site_count();

    // a degenerate cluster shares its first member's bin, so roundoff
    // cannot split it across a bin edge
    const double tol = r.eig.degeneracy_tolerance();
    std::vector<int> bin(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        auto& b = bin[static_cast<std::size_t>(i)];
        b = grid_.bin_of(r.eig.values(i));
        if (i > 0 && r.eig.values(i) - r.eig.values(i - 1) <= tol && bin[static_cast<std::size_t>(i - 1)] >= 0)
            b = bin[static_cast<std::size_t>(i - 1)];
        if (b < 0) ++overflow_;
    }

    std::vector<double> re(mean_.size(), 0.0);
    std::vector<double> im(mean_.size(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
        const int q = bin[static_cast<std::size_t>(j)];
        if (q < 0) continue;
        for (Eigen::Index i = 0; i < n; ++i) {
            const int p = bin[static_cast<std::size_t>(i)];
            if (p < 0) continue;
            const Complex w = va(i, j) * vb(j, i) * inv_n;
            const auto k = index(p, q);
            re[k] += w.real();
            im[k] += w.imag();
            if (w != Complex(0.0, 0.0)) touched_[k] = 1;
        }
    }

    ++count_;
    const double n_now = static_cast<double>(count_);
    for (std::size_t k = 0; k < re.size(); ++k) {
        const double delta = re[k] - mean_[k];
        mean_[k] += delta / n_now;
        m2_[k] += delta * (re[k] - mean_[k]);
        imag_mean_[k] += (im[k] - imag_mean_[k]) / n_now;
    }
    if (alpha_ == beta_) {
        const double lowest = *std::min_element(re.begin(), re.end());
        min_value_ = std::min(min_value_, lowest);
    }
}

void CccHistogram::merge(const CccHistogram& other) {
    if (other.grid_.bins != grid_.bins || other.grid_.lower != grid_.lower || other.grid_.upper != grid_.upper ||
        other.alpha_ != alpha_ || other.beta_ != beta_)
        throw std::invalid_argument("cannot merge histograms with different grids or components");
    if (other.count_ == 0) return;
    if (count_ == 0) {
        *this = other;
        return;
    }
    const double n_a = static_cast<double>(count_);
    const double n_b = static_cast<double>(other.count_);
    const double n = n_a + n_b;
    for (std::size_t k = 0; k < mean_.size(); ++k) {
        const double delta = other.mean_[k] - mean_[k];
        mean_[k] += delta * (n_b / n);
        m2_[k] += other.m2_[k] + delta * delta * (n_a * n_b / n);
        imag_mean_[k] += (other.imag_mean_[k] - imag_mean_[k]) * (n_b / n);
        touched_[k] = static_cast<unsigned char>(touched_[k] | other.touched_[k]);
    }
    count_ += other.count_;
    overflow_ += other.overflow_;
    min_value_ = std::min(min_value_, other.min_value_);
}

double CccHistogram::variance(int p, int q) const {
    return count_ > 1 ? m2_[index(p, q)] / static_cast<double>(count_ - 1) : 0.0;
}

double CccHistogram::off_diagonal_mass() const {
    double sum = 0.0;
    for (int p = 0; p < grid_.bins; ++p)
        for (int q = 0; q < grid_.bins; ++q)
            if (p != q) sum += mean(p, q);
    return sum;
}

double CccHistogram::max_abs_off_diagonal() const {
    double m = 0.0;
    for (int p = 0; p < grid_.bins; ++p)
        for (int q = 0; q < grid_.bins; ++q)
            if (p != q) m = std::max(m, std::abs(mean(p, q)));
    return m;
}

double CccHistogram::total_mass() const {
    double sum = 0.0;
    for (const double v : mean_) sum += v;
    return sum;
}

CccHistogram accumulate_ccc(const Realization& r, const EnergyGrid& grid, int alpha, int beta) {
    CccHistogram h(grid, alpha, beta);
    h.add(r);
    return h;
}

EnergyGrid default_ccc_grid(const LatticeSpec& lattice, const DisorderSpec& disorder, int bins) {
    const double bound = spectral_radius_bound(lattice, disorder);
    return EnergyGrid::uniform(-bound - 0.01, bound + 0.01, bins);
}

Complex window_measure_complex(const Realization& r, const EnergyInterval& d1, const EnergyInterval& d2,
                               int alpha, int beta) {
    require_component(r, alpha);
    require_component(r, beta);
    const auto& va = r.velocity_eigen[static_cast<std::size_t>(alpha)];
    const auto& vb = r.velocity_eigen[static_cast<std::size_t>(beta)];
    const auto [i0, i1] = r.eig.level_range(d1);
    const auto [j0, j1] = r.eig.level_range(d2);
    Complex sum(0.0, 0.0);
    for (Eigen::Index i = i0; i < i1; ++i)
        for (Eigen::Index j = j0; j < j1; ++j) sum += va(i, j) * vb(j, i);
    return sum / r.site_count();
}

double window_measure(const Realization& r, const EnergyInterval& d1, const EnergyInterval& d2, int alpha,
                      int beta) {
    return window_measure_complex(r, d1, d2, alpha, beta).real();
}

Complex window_measure_trace(const Realization& r, const EnergyInterval& d1, const EnergyInterval& d2,
                             int alpha, int beta) {
    const Operator e1 = spectral_projector(r.eig, d1);
    const Operator e2 = spectral_projector(r.eig, d2);
    const Operator left = e1 * r.velocity(alpha);
    const Operator right = e2 * r.velocity(beta);
    return trace_of_product(left, right) / r.site_count();
}

double total_window_measure(const Realization& r, const EnergyInterval& d1, const EnergyInterval& d2) {
    double sum = 0.0;
    for (int a = 0; a < r.dimension(); ++a) sum += window_measure(r, d1, d2, a, a);
    return sum;
}

std::string to_string(ScanVariant v) { return v == ScanVariant::diagonal ? "diagonal" : "box"; }

std::vector<double> geometric_ladder(double eps0, int rungs) {
    if (!(eps0 > 0.0) || rungs < 1) throw std::invalid_argument("ladder needs eps0 > 0 and at least one rung");
    std::vector<double> ladder;
    for (int k = 0; k < rungs; ++k) ladder.push_back(std::ldexp(eps0, -k));
    return ladder;
}

ScanAccumulator::ScanAccumulator(double anchor, std::vector<double> ladder, ScanVariant variant, bool centered)
    : anchor_(anchor), ladder_(std::move(ladder)), variant_(variant), centered_(centered),
      values_(ladder_.size()), levels_(ladder_.size()) {
    for (const double eps : ladder_)
        if (!(eps > 0.0)) throw std::invalid_argument("scan ladder entries must be positive");
}

std::pair<EnergyInterval, EnergyInterval> ScanAccumulator::windows(double eps) const {
    if (variant_ == ScanVariant::box)
        return {EnergyInterval::half_open(anchor_, anchor_ + eps), EnergyInterval::half_open(anchor_ - eps, anchor_)};
    const auto w = centered_ ? EnergyInterval::half_open(anchor_ - 0.5 * eps, anchor_ + 0.5 * eps)
                             : EnergyInterval::half_open(anchor_, anchor_ + eps);
    return {w, w};
}

std::vector<double> ScanAccumulator::values(const Realization& r) const {
    std::vector<double> out;
    out.reserve(ladder_.size());
    for (const double eps : ladder_) {
        const auto [d1, d2] = windows(eps);
        out.push_back(total_window_measure(r, d1, d2) / (eps * eps));
    }
    return out;
}

void ScanAccumulator::add(const Realization& r) {
    const auto v = values(r);
    for (std::size_t k = 0; k < ladder_.size(); ++k) {
        values_[k].add(v[k]);
        levels_[k].add(static_cast<double>(r.eig.level_count(windows(ladder_[k]).first)));
    }
}

void ScanAccumulator::merge(const ScanAccumulator& other) {
    if (other.ladder_ != ladder_) throw std::invalid_argument("cannot merge scans over different ladders");
    for (std::size_t k = 0; k < ladder_.size(); ++k) {
        values_[k].merge(other.values_[k]);
        levels_[k].merge(other.levels_[k]);
    }
}

WindowScan ScanAccumulator::result() const {
    WindowScan scan;
    scan.anchor = anchor_;
    scan.variant = variant_;
    scan.centered = centered_;
    scan.epsilons = ladder_;
    for (std::size_t k = 0; k < ladder_.size(); ++k) {
        scan.mean.push_back(values_[k].mean);
        scan.standard_error.push_back(values_[k].standard_error());
        scan.mean_levels.push_back(levels_[k].mean);
    }
    scan.realizations = values_.empty() ? 0 : values_.front().count;
    return scan;
}

WindowScan diagonal_scan(std::span<const Realization> ensemble, double anchor, const std::vector<double>& ladder,
                         bool centered) {
    if (ensemble.empty()) throw std::invalid_argument("diagonal_scan needs a non-empty ensemble");
    ScanAccumulator acc(anchor, ladder, ScanVariant::diagonal, centered);
    for (const auto& r : ensemble) acc.add(r);
    return acc.result();
}

WindowScan box_scan(std::span<const Realization> ensemble, double anchor, const std::vector<double>& ladder) {
    if (ensemble.empty()) throw std::invalid_argument("box_scan needs a non-empty ensemble");
    ScanAccumulator acc(anchor, ladder, ScanVariant::box);
    for (const auto& r : ensemble) acc.add(r);
    return acc.result();
}

bool DecompositionCheck::passed(double tol) const {
    return residual <= tol * std::max(1.0, std::abs(measure));
}

DecompositionCheck decomposition_check(const Realization& r, double anchor, double eps, int axis) {
    require_component(r, axis);
    if (r.lattice.periodic(axis))
        throw std::invalid_argument("decomposition check needs an open axis (position operator)");
    const auto window = EnergyInterval::half_open(anchor, anchor + eps);

    DecompositionCheck out;
    out.measure = window_measure(r, window, window, axis, axis);
    const auto [first, last] = r.eig.level_range(window);
    if (first == last) return out;

    const auto block = r.eig.vectors.middleCols(first, last - first);
    Eigen::VectorXd f(last - first);
    for (Eigen::Index m = first; m < last; ++m) f(m - first) = (r.eig.values(m) - anchor) / eps;

    const Eigen::MatrixXcd p = block * block.adjoint();
    const Eigen::MatrixXcd fh = block * f.cast<Complex>().asDiagonal() * block.adjoint();
    const Eigen::MatrixXcd f2h = block * f.array().square().matrix().cast<Complex>().asDiagonal() * block.adjoint();
    const Eigen::VectorXcd coords = site_coordinates(r.lattice, axis).cast<Complex>();
    const auto x = coords.asDiagonal();

    const Eigen::MatrixXcd fx = fh * x;
    const Eigen::MatrixXcd px = p * x;
    const double inv_n = 1.0 / r.site_count();
    // I = T(f x f x P), II = -T(f x P x f), III = -T(P x f^2 x P), IV = T(P x f x f)
    out.terms[0] = (trace_of_product(fx * fx, p) * inv_n).real();
    out.terms[1] = -(trace_of_product(fx * px, fh) * inv_n).real();
    out.terms[2] = -(trace_of_product(px * f2h, x * p) * inv_n).real();
    out.terms[3] = (trace_of_product(px * fx, fh) * inv_n).real();

    const double sum = out.terms[0] + out.terms[1] + out.terms[2] + out.terms[3];
    out.residual = std::abs(out.measure + eps * eps * sum);
    return out;
}

SumRule sum_rule(const Realization& r, int axis) {
    require_component(r, axis);
    const auto& v = r.velocity_eigen[static_cast<std::size_t>(axis)];
    SumRule out;
    out.mass = v.cwiseAbs2().sum() / r.site_count();
    const Operator vs = r.velocity(axis);
    out.trace = trace_per_volume(vs * vs, TraceWindow::full(r.lattice));
    return out;
}

}  // namespace ccclab
