#pragma once

#include "ccclab/realization.hpp"
#include "ccclab/spectral.hpp"
#include "ccclab/stats.hpp"

#include <span>
#include <vector>

namespace ccclab {

/// Spectral route: l^2 = (2/N) sum_{E_m in D} sum_{n non-degenerate} |v_nm|^2 / (E_n - E_m)^2.
/// `excluded` is (2/N) sum over degenerate pairs n != m of |x_nm|^2, the
/// weight the moment route still carries.
struct SpectralLength {
    double ell2 = 0.0;
    double excluded = 0.0;
};

/// All three routes need an open axis (std::invalid_argument otherwise).
SpectralLength loc_length_spectral(const Realization& r, const EnergyInterval& window, int axis);

/// Moment route: (2/N) sum_{E_m in D} (<m|x^2|m> - <m|x|m>^2).
double loc_length_moment(const Realization& r, const EnergyInterval& window, int axis);

/// Cesaro route: (1/T) int_0^T (1/N) sum_{m in D} <m|(x(t) - x)^2|m> dt, one
/// value per averaging time. The time integral is done in closed form per pair.
std::vector<double> loc_length_time_average(const Realization& r, const EnergyInterval& window, int axis,
                                            const std::vector<double>& averaging_times);

/// M_a(D, D) / (|D|^2 l_a^2(D)), with the moment-route l^2. Zero when both
/// sides vanish; InvariantViolation when only the denominator does.
double ccc_loc_bound(const Realization& r, const EnergyInterval& window, int axis);

struct LocalizationReport {
    EnergyInterval window;
    std::vector<double> ell2_spectral;  ///< per axis
    std::vector<double> ell2_moment;
    std::vector<double> excluded;
    std::vector<double> bound_ratio;
    std::vector<double> averaging_times;
    std::vector<double> ell2_time;      ///< summed over axes, one per averaging time
    double total_spectral = 0.0;
    double total_moment = 0.0;
    /// |spectral + excluded - moment| over all axes.
    double route_gap = 0.0;
};

LocalizationReport localization_report(const Realization& r, const EnergyInterval& window,
                                       const std::vector<double>& averaging_times = {});

/// Per-rung check of (2/eps^2) M(I, I) <= l^2(I), I = [E, E + eps), with both
/// sides summed over axes.
struct VanishingRung {
    double eps = 0.0;
    double scaled_measure = 0.0;   ///< ensemble mean of (2/eps^2) M
    double scaled_measure_se = 0.0;
    double ell2 = 0.0;             ///< ensemble mean of l^2
    double ell2_se = 0.0;
    double worst_ratio = 0.0;      ///< max over realizations of (2/eps^2) M / l^2
    bool holds = true;             ///< inequality held on every realization
};

struct VanishingReport {
    double anchor = 0.0;
    std::vector<VanishingRung> rungs;
    std::size_t realizations = 0;
    bool holds() const;
};

class VanishingAccumulator {
public:
    /// Needs at least two rungs.
    VanishingAccumulator(double anchor, std::vector<double> ladder);
    void add(const Realization& r);
    void merge(const VanishingAccumulator& other);
    VanishingReport result() const;

private:
    double anchor_;
    std::vector<double> ladder_;
    std::vector<RunningStats> measure_, ell2_;
    std::vector<double> worst_;
    std::vector<unsigned char> holds_;
};

VanishingReport vanishing_test(std::span<const Realization> ensemble, double anchor, const std::vector<double>& ladder);

/// Largest bound ratio over sliding intervals [a, a + width) with a stepping by
/// `step` across the spectrum of each realization.
class BoundSweep {
public:
    BoundSweep(std::vector<double> widths, double step);
    void add(const Realization& r);
    void merge(const BoundSweep& other);

    double max_ratio() const { return max_ratio_; }
    std::size_t intervals() const { return intervals_; }
    std::size_t realizations() const { return realizations_; }

private:
    std::vector<double> widths_;
    double step_;
    double max_ratio_ = 0.0;
    std::size_t intervals_ = 0;
    std::size_t realizations_ = 0;
};

}  // namespace ccclab
