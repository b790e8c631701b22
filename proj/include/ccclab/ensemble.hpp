#pragma once

#include "ccclab/ccc.hpp"
#include "ccclab/model.hpp"
#include "ccclab/realization.hpp"
#include "ccclab/spectral.hpp"
#include "ccclab/stats.hpp"

#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccclab {

/// Error with added context that keeps the original exception reachable.
class NestedError : public std::runtime_error {
public:
    NestedError(const std::string& what, std::exception_ptr cause)
        : std::runtime_error(what), cause(std::move(cause)) {}
    std::exception_ptr cause;
};

/// Thrown when a realization fails; names the index and derived seed.
class EnsembleError : public NestedError {
public:
    EnsembleError(std::uint64_t index, std::uint64_t seed, const std::string& what, std::exception_ptr cause = nullptr);
    std::uint64_t index;
    std::uint64_t seed;
};

struct EnsembleConfig {
    LatticeSpec lattice;
    DisorderSpec disorder;  ///< master_seed is overwritten by `master_seed`
    std::size_t realizations = 1;
    std::uint64_t master_seed = 0;
    int workers = 1;
    SolveMode mode = SolveMode::values_and_vectors;
    SolverLimits limits;
    /// Realizations per work unit. Part of the result's definition (merge
    /// order), never derived from the worker count.
    std::size_t block_size = 16;
    /// Optional replacement for building realization `index` (e.g. a cache).
    std::function<Realization(const LatticeSpec&, const DisorderSpec&)> source;

    void validate() const;
    DisorderSpec disorder_for(std::uint64_t index) const;
};

/// Runs `task(block)` for every block index, spread over `workers` threads.
/// Rethrows the failure with the smallest block index.
void run_blocks(std::size_t blocks, int workers, const std::function<void(std::size_t)>& task);

Realization make_realization(const EnsembleConfig& cfg, std::uint64_t index);

/// Builds every realization, feeds it to `visit(acc, realization)` inside a
/// block-local accumulator from `make()`, and merges blocks in index order.
/// The result is a pure function of the config (bit-identical for any worker count).
template <class Acc, class Make, class Visit>
Acc run_ensemble(const EnsembleConfig& cfg, Make make, Visit visit) {
    cfg.validate();
    const std::size_t blocks = (cfg.realizations + cfg.block_size - 1) / cfg.block_size;
    std::vector<std::optional<Acc>> partial(blocks);
    run_blocks(blocks, cfg.workers, [&](std::size_t b) {
        Acc acc = make();
        const std::size_t first = b * cfg.block_size;
        const std::size_t last = std::min(cfg.realizations, first + cfg.block_size);
        for (std::size_t k = first; k < last; ++k) {
            const auto index = static_cast<std::uint64_t>(k);
            try {
                visit(acc, make_realization(cfg, index));
            } catch (const EnsembleError&) {
                throw;
            } catch (const std::exception& e) {
                throw EnsembleError(index, realization_seed(cfg.master_seed, index), e.what(),
                                    std::current_exception());
            }
        }
        partial[b].emplace(std::move(acc));
    });
    Acc total = make();
    for (auto& p : partial) total.merge(*p);
    return total;
}

/// Spectra only, in realization order.
std::vector<Eigen::VectorXd> ensemble_spectra(EnsembleConfig cfg);

/// Windowed level-count density per unit energy in J = [E, E + |J|):
/// (1/|W|) sum_{E_m in J} sum_{s in W} |psi_m(s)|^2 / |J|.
struct WegnerReport {
    double anchor = 0.0;
    std::vector<double> widths;
    std::vector<double> mean;
    std::vector<double> standard_error;
    double density_bound = 0.0;  ///< sup of the single-site density
    double margin = 0.0;
    bool plateau = false;        ///< max <= 2 min over the ladder (all positive)
    bool bounded = false;        ///< every mean <= density_bound (1 + margin)
    std::size_t realizations = 0;
};

class WegnerAccumulator {
public:
    WegnerAccumulator(double anchor, std::vector<double> widths, double window_fraction = 0.6);
    void add(const Realization& r);
    void merge(const WegnerAccumulator& other);
    WegnerReport result(double density_bound, double margin = 0.25) const;

private:
    double anchor_;
    std::vector<double> widths_;
    double fraction_;
    std::vector<RunningStats> stats_;
};

/// Second factorial moment E{K(K-1)} of the whole-box level count K in the
/// centred window [E - |D|/2, E + |D|/2).
struct MinamiReport {
    double anchor = 0.0;
    std::vector<double> widths;
    std::vector<double> mean;
    std::vector<double> standard_error;
    std::vector<double> bound;  ///< (rho_inf |D| N)^2
    bool bounded = false;
    double slope = 0.0;         ///< log-log slope of the moment against |D|
    double slope_se = 0.0;
    int fitted_rungs = 0;
    std::size_t realizations = 0;
};

class MinamiAccumulator {
public:
    MinamiAccumulator(double anchor, std::vector<double> widths);
    void add(const Eigen::VectorXd& spectrum);
    void add(const Realization& r) { add(r.eig.values); }
    void merge(const MinamiAccumulator& other);
    MinamiReport result(double density_bound, std::size_t sites) const;

private:
    double anchor_;
    std::vector<double> widths_;
    std::vector<RunningStats> stats_;
};

/// Double-log fit of the pooled IDS near the lower edge.
struct LifshitzFit {
    bool ok = false;
    std::string reason;
    double edge = 0.0;        ///< pooled spectral minimum
    double exponent = 0.0;    ///< minus the slope of log(-log dN) against log(E - E0)
    double ci_low = 0.0;
    double ci_high = 0.0;
    double residual = 0.0;
    int points = 0;
    std::vector<double> log_offset;      ///< log(E - E0) of the fitted points
    std::vector<double> log_log_excess;  ///< log(-log(N(E) - N(E0)))
};

struct LifshitzBand {
    double lower = 1e-6;
    double upper = 1e-2;
    double max_increment = 1e-4;  ///< the IDS must be resolved at least this finely
    int min_points = 5;
};

LifshitzFit lifshitz_fit(const IntegratedDensity& ids, const LifshitzBand& band = {});

enum class ScalingModel { power, power_log };
std::string to_string(ScalingModel m);
ScalingModel parse_scaling_model(const std::string& text);

/// Weighted log-space least squares of value = c eps^a |log eps|^b.
struct ScalingFit {
    ScalingModel model = ScalingModel::power;
    bool ok = false;
    bool degenerate = false;
    std::string reason;
    double c = 0.0;
    double a = 0.0;
    double b = 0.0;
    double a_se = 0.0;
    double b_se = 0.0;
    double a_low = 0.0;   ///< 95% confidence interval on a
    double a_high = 0.0;
    double residual = 0.0;  ///< weighted rms of the log residuals
    int rungs = 0;
    /// The data cannot exclude decay at least as fast as eps^1 (a_high >= 1 - 0.1).
    bool consistent_with_envelope = false;
};

struct ScalingOptions {
    double max_relative_se = 0.3;
    int min_rungs = 4;
    double confidence = 0.95;
};

ScalingFit scaling_fit(const std::vector<double>& eps, const std::vector<double>& values,
                       const std::vector<double>& standard_errors, ScalingModel model,
                       const ScalingOptions& opts = {});
ScalingFit scaling_fit(const WindowScan& scan, ScalingModel model, const ScalingOptions& opts = {});

/// Two-sided Student t quantile for the given confidence and degrees of freedom.
double t_quantile(double confidence, double dof);

}  // namespace ccclab
