#pragma once

#include "ccclab/realization.hpp"
#include "ccclab/spectral.hpp"
#include "ccclab/stats.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace ccclab {

/// Binned finite-volume current-current correlation measure for one
/// component pair, accumulated over realizations.
///
/// Each realization contributes the 2-d array
///   h(p, q) = (1/N) sum_{E_i in bin p, E_j in bin q} Re(v_{a;ij} v_{b;ji}),
/// and the histogram keeps the per-bin ensemble mean and variance. The
/// imaginary parts (the Hall channel for a != b) are kept alongside.
class CccHistogram {
public:
    CccHistogram(EnergyGrid grid, int alpha, int beta);

    void add(const Realization& r);
    void merge(const CccHistogram& other);

    const EnergyGrid& grid() const { return grid_; }
    int alpha() const { return alpha_; }
    int beta() const { return beta_; }
    std::size_t realizations() const { return count_; }
    /// Eigenvalues that fell outside the grid, summed over realizations.
    std::size_t overflow() const { return overflow_; }
    /// Most negative per-realization bin value seen on a diagonal-component histogram.
    double min_bin_value() const { return min_value_; }

    double mean(int p, int q) const { return mean_[index(p, q)]; }
    double variance(int p, int q) const;
    double imag_mean(int p, int q) const { return imag_mean_[index(p, q)]; }
    /// True if any realization put nonzero weight into the bin.
    bool touched(int p, int q) const { return touched_[index(p, q)] != 0; }

    /// Sum of mean weights over bins with p != q.
    double off_diagonal_mass() const;
    double max_abs_off_diagonal() const;
    double total_mass() const;

private:
    std::size_t index(int p, int q) const {
        return static_cast<std::size_t>(p) * static_cast<std::size_t>(grid_.bins) + static_cast<std::size_t>(q);
    }

    EnergyGrid grid_;
    int alpha_;
    int beta_;
    std::size_t count_ = 0;
    std::size_t overflow_ = 0;
    double min_value_ = 0.0;
    std::vector<double> mean_, m2_, imag_mean_;
    std::vector<unsigned char> touched_;
};

/// Single-realization contribution (a one-element ensemble).
CccHistogram accumulate_ccc(const Realization& r, const EnergyGrid& grid, int alpha, int beta);

/// Default histogram grid: 512 bins over a norm bound of the model plus 0.01.
EnergyGrid default_ccc_grid(const LatticeSpec& lattice, const DisorderSpec& disorder, int bins = 512);

/// M_{ab}(D1, D2) by the eigen-sum over levels in D1 x D2.
Complex window_measure_complex(const Realization& r, const EnergyInterval& d1, const EnergyInterval& d2,
                               int alpha, int beta);
double window_measure(const Realization& r, const EnergyInterval& d1, const EnergyInterval& d2, int alpha,
                      int beta);

/// M_{ab}(D1, D2) as (1/N) Tr(E(D1) v_a E(D2) v_b) with site-basis operators.
Complex window_measure_trace(const Realization& r, const EnergyInterval& d1, const EnergyInterval& d2,
                             int alpha, int beta);

/// sum_a M_{aa}(D1, D2), the positive measure M.
double total_window_measure(const Realization& r, const EnergyInterval& d1, const EnergyInterval& d2);

enum class ScanVariant { diagonal, box };
std::string to_string(ScanVariant v);

/// M(D1, D2)/eps^2 over an eps ladder with ensemble standard errors.
/// diagonal: D1 = D2 = [E, E+eps) (or [E-eps/2, E+eps/2) when centered).
/// box:      D1 = [E, E+eps), D2 = [E-eps, E).
struct WindowScan {
    double anchor = 0.0;
    ScanVariant variant = ScanVariant::diagonal;
    bool centered = false;
    std::vector<double> epsilons;
    std::vector<double> mean;
    std::vector<double> standard_error;
    /// Mean number of levels in D1 per realization (the eps * N * rho(E) diagnostic).
    std::vector<double> mean_levels;
    std::size_t realizations = 0;
};

class ScanAccumulator {
public:
    ScanAccumulator(double anchor, std::vector<double> ladder, ScanVariant variant, bool centered = false);

    void add(const Realization& r);
    void merge(const ScanAccumulator& other);
    WindowScan result() const;

    std::pair<EnergyInterval, EnergyInterval> windows(double eps) const;
    /// Per-realization scan values, one per rung.
    std::vector<double> values(const Realization& r) const;

private:
    double anchor_;
    std::vector<double> ladder_;
    ScanVariant variant_;
    bool centered_;
    std::vector<RunningStats> values_;
    std::vector<RunningStats> levels_;
};

/// eps_k = eps0 * 2^-k, k = 0 .. rungs-1.
std::vector<double> geometric_ladder(double eps0, int rungs);

/// Throws std::invalid_argument for an empty ensemble.
WindowScan diagonal_scan(std::span<const Realization> ensemble, double anchor, const std::vector<double>& ladder,
                         bool centered = false);
WindowScan box_scan(std::span<const Realization> ensemble, double anchor, const std::vector<double>& ladder);

/// Finite-volume check of the four-term expansion
///   M_a(I, I) = -eps^2 (I + II + III + IV),  I = [E, E+eps),
/// with f(s) = (s - E) chi_I(s) / eps and every term a full trace of
/// site-basis operator products. Needs an open axis.
struct DecompositionCheck {
    double measure = 0.0;
    std::array<double, 4> terms{};
    double residual = 0.0;
    bool passed(double tol = 1e-9) const;
};

DecompositionCheck decomposition_check(const Realization& r, double anchor, double eps, int axis);

/// (total ccc mass, (1/N) Tr v_a^2); equal by completeness.
struct SumRule {
    double mass = 0.0;
    double trace = 0.0;
};

SumRule sum_rule(const Realization& r, int axis);

}  // namespace ccclab
