#include "ccclab/localization.hpp"

#include "ccclab/ccc.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ccclab {

namespace {

void require_open_axis(const Realization& r, int axis) {
    if (axis < 0 || axis >= r.dimension())
        throw std::out_of_range(fmt::format("axis {} out of range", axis + 1));
    if (r.lattice.periodic(axis))
        throw std::invalid_argument(
            fmt::format("localization length needs an open axis {} (position ill-defined)", axis + 1));
    if (!r.eig.has_vectors()) throw std::invalid_argument("localization length needs eigenvectors");
}

void require_all_open(const Realization& r) {
    for (int a = 0; a < r.dimension(); ++a) require_open_axis(r, a);
}

// <m|x|m> and <m|x^2|m> for every level
struct LevelMoments {
    Eigen::VectorXd first;
    Eigen::VectorXd second;
};

LevelMoments level_moments(const Realization& r, int axis) {
    const Eigen::VectorXd x = site_coordinates(r.lattice, axis);
    const Eigen::MatrixXd w = r.eig.vectors.cwiseAbs2();
    LevelMoments lm;
    lm.first = w.transpose() * x;
    lm.second = w.transpose() * x.cwiseProduct(x);
    return lm;
}

double moment_sum(const LevelMoments& lm, Eigen::Index first, Eigen::Index last, double n) {
    double sum = 0.0;
    for (Eigen::Index m = first; m < last; ++m) sum += lm.second(m) - lm.first(m) * lm.first(m);
    return 2.0 * sum / n;
}

double diagonal_measure(const Eigen::MatrixXcd& v, Eigen::Index first, Eigen::Index last, double n) {
    if (first == last) return 0.0;
    return v.block(first, first, last - first, last - first).cwiseAbs2().sum() / n;
}

}  // namespace

SpectralLength loc_length_spectral(const Realization& r, const EnergyInterval& window, int axis) {
    require_open_axis(r, axis);
    const auto& v = r.velocity_eigen.at(static_cast<std::size_t>(axis));
    const auto& e = r.eig.values;
    const auto& u = r.eig.vectors;
    const double tol = r.eig.degeneracy_tolerance();
    const Eigen::VectorXd x = site_coordinates(r.lattice, axis);
    const auto [first, last] = r.eig.level_range(window);

    SpectralLength out;
    for (Eigen::Index m = first; m < last; ++m)
        for (Eigen::Index n = 0; n < r.size(); ++n) {
            if (n == m) continue;
            const double omega = e(n) - e(m);
            if (std::abs(omega) > tol) {
                out.ell2 += std::norm(v(n, m)) / (omega * omega);
            } else {
                const Complex xnm = u.col(n).dot(x.cast<Complex>().cwiseProduct(u.col(m)));
                out.excluded += std::norm(xnm);
            }
        }
    out.ell2 *= 2.0 / r.site_count();
    out.excluded *= 2.0 / r.site_count();
    return out;
}

double loc_length_moment(const Realization& r, const EnergyInterval& window, int axis) {
    require_open_axis(r, axis);
    const auto [first, last] = r.eig.level_range(window);
    if (first == last) return 0.0;
    return moment_sum(level_moments(r, axis), first, last, r.site_count());
}

std::vector<double> loc_length_time_average(const Realization& r, const EnergyInterval& window, int axis,
                                            const std::vector<double>& averaging_times) {
    require_open_axis(r, axis);
    for (std::size_t k = 0; k < averaging_times.size(); ++k) {
        if (!(averaging_times[k] > 0.0)) throw std::invalid_argument("averaging times must be positive");
        if (k > 0 && averaging_times[k] <= averaging_times[k - 1])
            throw std::invalid_argument("averaging times must increase");
    }
    const auto& v = r.velocity_eigen.at(static_cast<std::size_t>(axis));
    const auto& e = r.eig.values;
    const double tol = r.eig.degeneracy_tolerance();
    const auto [first, last] = r.eig.level_range(window);

    // |x_nm|^2 = |v_nm|^2 / omega^2; degenerate pairs do not move
    std::vector<double> weight, freq;
    for (Eigen::Index m = first; m < last; ++m)
        for (Eigen::Index n = 0; n < r.size(); ++n) {
            const double omega = e(n) - e(m);
            if (std::abs(omega) <= tol) continue;
            weight.push_back(2.0 * std::norm(v(n, m)) / (omega * omega) / r.site_count());
            freq.push_back(omega);
        }

    // (1/T) int_0^T (1 - cos wt) dt = 1 - sin(wT)/(wT), exact per pair
    std::vector<double> out;
    for (const double horizon : averaging_times) {
        double g = 0.0;
        for (std::size_t p = 0; p < weight.size(); ++p) {
            const double phase = freq[p] * horizon;
            g += weight[p] * (1.0 - std::sin(phase) / phase);
        }
        out.push_back(g);
    }
    return out;
}

double ccc_loc_bound(const Realization& r, const EnergyInterval& window, int axis) {
    require_open_axis(r, axis);
    const double width = window.width();
    if (!std::isfinite(width)) throw std::invalid_argument("the bound ratio needs a finite interval");
    const double measure = window_measure(r, window, window, axis, axis);
    const double ell2 = loc_length_moment(r, window, axis);
    const double denom = width * width * ell2;
    if (denom > 0.0) return measure / denom;
    if (std::abs(measure) <= 1e-14) return 0.0;
    throw InvariantViolation(fmt::format("ccc bound: measure {} with vanishing localization length", measure));
}

LocalizationReport localization_report(const Realization& r, const EnergyInterval& window,
                                       const std::vector<double>& averaging_times) {
    require_all_open(r);
    LocalizationReport rep;
    rep.window = window;
    rep.averaging_times = averaging_times;
    rep.ell2_time.assign(averaging_times.size(), 0.0);
    for (int a = 0; a < r.dimension(); ++a) {
        const auto spectral = loc_length_spectral(r, window, a);
        const double moment = loc_length_moment(r, window, a);
        rep.ell2_spectral.push_back(spectral.ell2);
        rep.excluded.push_back(spectral.excluded);
        rep.ell2_moment.push_back(moment);
        rep.bound_ratio.push_back(std::isfinite(window.width()) ? ccc_loc_bound(r, window, a) : 0.0);
        rep.total_spectral += spectral.ell2;
        rep.total_moment += moment;
        rep.route_gap = std::max(rep.route_gap, std::abs(spectral.ell2 + spectral.excluded - moment));
        if (!averaging_times.empty()) {
            const auto series = loc_length_time_average(r, window, a, averaging_times);
            for (std::size_t k = 0; k < series.size(); ++k) rep.ell2_time[k] += series[k];
        }
    }
    return rep;
}

bool VanishingReport::holds() const {
    return std::all_of(rungs.begin(), rungs.end(), [](const VanishingRung& r) { return r.holds; });
}

VanishingAccumulator::VanishingAccumulator(double anchor, std::vector<double> ladder)
    : anchor_(anchor), ladder_(std::move(ladder)), measure_(ladder_.size()), ell2_(ladder_.size()),
      worst_(ladder_.size(), 0.0), holds_(ladder_.size(), 1) {
    if (ladder_.size() < 2) throw std::invalid_argument("vanishing test needs at least two rungs");
}

void VanishingAccumulator::add(const Realization& r) {
    require_all_open(r);
    std::vector<LevelMoments> moments;
    for (int a = 0; a < r.dimension(); ++a) moments.push_back(level_moments(r, a));
    for (std::size_t k = 0; k < ladder_.size(); ++k) {
        const double eps = ladder_[k];
        const auto [first, last] = r.eig.level_range(EnergyInterval::half_open(anchor_, anchor_ + eps));
        double m = 0.0, ell2 = 0.0;
        for (int a = 0; a < r.dimension(); ++a) {
            m += diagonal_measure(r.velocity_eigen[static_cast<std::size_t>(a)], first, last, r.site_count());
            ell2 += first == last ? 0.0 : moment_sum(moments[static_cast<std::size_t>(a)], first, last, r.site_count());
        }
        const double scaled = 2.0 * m / (eps * eps);
        measure_[k].add(scaled);
        ell2_[k].add(ell2);
        if (ell2 > 0.0) worst_[k] = std::max(worst_[k], scaled / ell2);
        if (scaled > ell2 * (1.0 + 1e-9) + 1e-14) holds_[k] = 0;
    }
}

void VanishingAccumulator::merge(const VanishingAccumulator& other) {
    if (other.ladder_ != ladder_) throw std::invalid_argument("cannot merge vanishing tests over different ladders");
    for (std::size_t k = 0; k < ladder_.size(); ++k) {
        measure_[k].merge(other.measure_[k]);
        ell2_[k].merge(other.ell2_[k]);
        worst_[k] = std::max(worst_[k], other.worst_[k]);
        holds_[k] = static_cast<unsigned char>(holds_[k] & other.holds_[k]);
    }
}

VanishingReport VanishingAccumulator::result() const {
    VanishingReport rep;
    rep.anchor = anchor_;
    rep.realizations = measure_.front().count;
    for (std::size_t k = 0; k < ladder_.size(); ++k) {
        VanishingRung rung;
        rung.eps = ladder_[k];
        rung.scaled_measure = measure_[k].mean;
        rung.scaled_measure_se = measure_[k].standard_error();
        rung.ell2 = ell2_[k].mean;
        rung.ell2_se = ell2_[k].standard_error();
        rung.worst_ratio = worst_[k];
        rung.holds = holds_[k] != 0;
        rep.rungs.push_back(rung);
    }
    return rep;
}

VanishingReport vanishing_test(std::span<const Realization> ensemble, double anchor, const std::vector<double>& ladder) {
    if (ensemble.empty()) throw std::invalid_argument("vanishing_test needs a non-empty ensemble");
    VanishingAccumulator acc(anchor, ladder);
    for (const auto& r : ensemble) acc.add(r);
    return acc.result();
}

BoundSweep::BoundSweep(std::vector<double> widths, double step) : widths_(std::move(widths)), step_(step) {
    if (!(step_ > 0.0)) throw std::invalid_argument("sweep step must be positive");
    for (const double w : widths_)
        if (!(w > 0.0)) throw std::invalid_argument("sweep widths must be positive");
}

void BoundSweep::add(const Realization& r) {
    require_all_open(r);
    ++realizations_;
    if (r.size() == 0) return;
    const double lo = r.eig.values(0);
    const double hi = r.eig.values(r.size() - 1);
    for (int a = 0; a < r.dimension(); ++a) {
        const auto lm = level_moments(r, a);
        const auto& v = r.velocity_eigen[static_cast<std::size_t>(a)];
        for (const double width : widths_) {
            for (double start = lo - width; start <= hi; start += step_) {
                const auto window = EnergyInterval::half_open(start, start + width);
                const auto [first, last] = r.eig.level_range(window);
                ++intervals_;
                if (first == last) continue;
                const double m = diagonal_measure(v, first, last, r.site_count());
                const double ell2 = moment_sum(lm, first, last, r.site_count());
                const double denom = width * width * ell2;
                if (denom > 0.0) {
                    max_ratio_ = std::max(max_ratio_, m / denom);
                } else if (m > 1e-14) {
                    throw InvariantViolation("ccc bound: measure with vanishing localization length");
                }
            }
        }
    }
}

void BoundSweep::merge(const BoundSweep& other) {
    max_ratio_ = std::max(max_ratio_, other.max_ratio_);
    intervals_ += other.intervals_;
    realizations_ += other.realizations_;
}

}  // namespace ccclab
