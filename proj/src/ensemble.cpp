#include "ccclab/ensemble.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

namespace ccclab {

EnsembleError::EnsembleError(std::uint64_t index_, std::uint64_t seed_, const std::string& what,
                             std::exception_ptr cause_)
    : NestedError(fmt::format("realization {} (seed {:#018x}) failed: {}", index_, seed_, what), std::move(cause_)),
      index(index_), seed(seed_) {}

void EnsembleConfig::validate() const {
    lattice.validate();
    disorder.validate();
    if (realizations < 1) throw std::invalid_argument("an ensemble needs at least one realization");
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
    if (block_size < 1) throw std::invalid_argument("block_size must be >= 1");
}

DisorderSpec EnsembleConfig::disorder_for(std::uint64_t index) const {
    DisorderSpec d = disorder;
    d.master_seed = master_seed;
    d.realization = index;
    return d;
}

Realization make_realization(const EnsembleConfig& cfg, std::uint64_t index) {
    const DisorderSpec d = cfg.disorder_for(index);
    if (cfg.source) return cfg.source(cfg.lattice, d);
    return Realization::build(cfg.lattice, d, cfg.limits, cfg.mode);
}

void run_blocks(std::size_t blocks, int workers, const std::function<void(std::size_t)>& task) {
    std::vector<std::exception_ptr> errors(blocks);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= blocks || failed.load()) return;
            try {
                task(b);
            } catch (...) {
                errors[b] = std::current_exception();
                failed.store(true);
            }
        }
    };
    const auto threads = static_cast<std::size_t>(std::max(1, workers));
    if (threads == 1 || blocks <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(threads, blocks); ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

namespace {

struct SpectrumList {
    std::vector<Eigen::VectorXd> spectra;
    void merge(SpectrumList& other) {
        for (auto& s : other.spectra) spectra.push_back(std::move(s));
    }
};

// ordinary least squares slope with its standard error
std::pair<double, double> ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    if (sxx <= 0.0) return {0.0, std::numeric_limits<double>::infinity()};
    const double slope = sxy / sxx;
    double ss = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) ss += std::pow(y[k] - my - slope * (x[k] - mx), 2);
    const double se = x.size() > 2 ? std::sqrt(ss / (n - 2.0) / sxx) : 0.0;
    return {slope, se};
}

}  // namespace

std::vector<Eigen::VectorXd> ensemble_spectra(EnsembleConfig cfg) {
    cfg.mode = SolveMode::values_only;
    auto list = run_ensemble<SpectrumList>(
        cfg, [] { return SpectrumList{}; },
        [](SpectrumList& acc, const Realization& r) { acc.spectra.push_back(r.eig.values); });
    return std::move(list.spectra);
}

WegnerAccumulator::WegnerAccumulator(double anchor, std::vector<double> widths, double window_fraction)
    : anchor_(anchor), widths_(std::move(widths)), fraction_(window_fraction), stats_(widths_.size()) {
    for (const double w : widths_)
        if (!(w > 0.0)) throw std::invalid_argument("Wegner widths must be positive");
}

void WegnerAccumulator::add(const Realization& r) {
    if (!r.eig.has_vectors()) throw std::invalid_argument("the Wegner estimator needs eigenvectors");
    const auto window = TraceWindow::central(r.lattice, fraction_);
    for (std::size_t k = 0; k < widths_.size(); ++k) {
        const auto [first, last] = r.eig.level_range(EnergyInterval::half_open(anchor_, anchor_ + widths_[k]));
        double weight = 0.0;
        for (Eigen::Index m = first; m < last; ++m)
            for (const Eigen::Index s : window.sites()) weight += std::norm(r.eig.vectors(s, m));
        stats_[k].add(weight / static_cast<double>(window.size()) / widths_[k]);
    }
}

void WegnerAccumulator::merge(const WegnerAccumulator& other) {
    if (other.widths_ != widths_) throw std::invalid_argument("cannot merge Wegner estimators over different ladders");
    for (std::size_t k = 0; k < stats_.size(); ++k) stats_[k].merge(other.stats_[k]);
}

WegnerReport WegnerAccumulator::result(double density_bound, double margin) const {
    WegnerReport rep;
    rep.anchor = anchor_;
    rep.widths = widths_;
    rep.density_bound = density_bound;
    rep.margin = margin;
    rep.realizations = stats_.empty() ? 0 : stats_.front().count;
    for (const auto& s : stats_) {
        rep.mean.push_back(s.mean);
        rep.standard_error.push_back(s.standard_error());
    }
    if (!rep.mean.empty()) {
        const auto [lo, hi] = std::minmax_element(rep.mean.begin(), rep.mean.end());
        rep.plateau = *lo > 0.0 && *hi <= 2.0 * *lo;
        rep.bounded = *hi <= density_bound * (1.0 + margin);
    }
    return rep;
}

MinamiAccumulator::MinamiAccumulator(double anchor, std::vector<double> widths)
    : anchor_(anchor), widths_(std::move(widths)), stats_(widths_.size()) {
    for (const double w : widths_)
        if (!(w > 0.0)) throw std::invalid_argument("Minami widths must be positive");
}

void MinamiAccumulator::add(const Eigen::VectorXd& spectrum) {
    for (std::size_t k = 0; k < widths_.size(); ++k) {
        const double lo = anchor_ - 0.5 * widths_[k];
        const double hi = anchor_ + 0.5 * widths_[k];
        double count = 0.0;
        for (Eigen::Index m = 0; m < spectrum.size(); ++m)
            if (spectrum(m) >= lo && spectrum(m) < hi) count += 1.0;
        stats_[k].add(count * (count - 1.0));
    }
}

void MinamiAccumulator::merge(const MinamiAccumulator& other) {
    if (other.widths_ != widths_) throw std::invalid_argument("cannot merge Minami estimators over different ladders");
    for (std::size_t k = 0; k < stats_.size(); ++k) stats_[k].merge(other.stats_[k]);
}

MinamiReport MinamiAccumulator::result(double density_bound, std::size_t sites) const {
    MinamiReport rep;
    rep.anchor = anchor_;
    rep.widths = widths_;
    rep.realizations = stats_.empty() ? 0 : stats_.front().count;
    rep.bounded = true;
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < stats_.size(); ++k) {
        rep.mean.push_back(stats_[k].mean);
        rep.standard_error.push_back(stats_[k].standard_error());
        const double b = std::pow(density_bound * widths_[k] * static_cast<double>(sites), 2);
        rep.bound.push_back(b);
        if (stats_[k].mean > b) rep.bounded = false;
        if (stats_[k].mean > 0.0) {
            lx.push_back(std::log(widths_[k]));
            ly.push_back(std::log(stats_[k].mean));
        }
    }
    rep.fitted_rungs = static_cast<int>(lx.size());
    if (lx.size() >= 2) std::tie(rep.slope, rep.slope_se) = ols_slope(lx, ly);
    return rep;
}

LifshitzFit lifshitz_fit(const IntegratedDensity& ids, const LifshitzBand& band) {
    LifshitzFit fit;
    const auto& pool = ids.sorted();
    if (pool.size() < 2) {
        fit.reason = "too few eigenvalues";
        return fit;
    }
    const double total = static_cast<double>(pool.size());
    fit.edge = pool.front();

    // distinct energies with the IDS just above each
    std::vector<double> energy, excess;
    std::size_t k = 0;
    std::size_t at_edge = 0;
    double finest = std::numeric_limits<double>::infinity();
    double previous = 0.0;
    while (k < pool.size()) {
        std::size_t j = k;
        while (j < pool.size() && pool[j] == pool[k]) ++j;
        if (k == 0) {
            at_edge = j;
        } else {
            const double dn = static_cast<double>(j - at_edge) / total;
            finest = std::min(finest, dn - previous);
            previous = dn;
            energy.push_back(pool[k]);
            excess.push_back(dn);
        }
        if (k == 0) previous = 0.0;
        k = j;
    }
    if (energy.empty()) {
        fit.reason = "degenerate spectrum";
        return fit;
    }
    if (finest > band.max_increment) {
        fit.reason = fmt::format("IDS jumps by {:.3g} > {:.3g}: no resolved tail", finest, band.max_increment);
        return fit;
    }

    std::vector<double> x, y;
    for (std::size_t i = 0; i < excess.size(); ++i) {
        if (excess[i] < band.lower) continue;
        if (excess[i] > band.upper) break;
        x.push_back(std::log(energy[i] - fit.edge));
        y.push_back(std::log(-std::log(excess[i])));
    }
    fit.points = static_cast<int>(x.size());
    fit.log_offset = x;
    fit.log_log_excess = y;
    if (fit.points < band.min_points) {
        fit.reason = fmt::format("only {} distinct points in the fit band", fit.points);
        return fit;
    }
    const auto [slope, se] = ols_slope(x, y);
    fit.exponent = -slope;
    const double half = t_quantile(0.95, static_cast<double>(x.size()) - 2.0) * se;
    fit.ci_low = fit.exponent - half;
    fit.ci_high = fit.exponent + half;
    double ss = 0.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) ss += std::pow(y[i] - my - slope * (x[i] - mx), 2);
    fit.residual = std::sqrt(ss / static_cast<double>(x.size()));
    fit.ok = true;
    return fit;
}

std::string to_string(ScalingModel m) { return m == ScalingModel::power ? "power" : "power_log"; }

ScalingModel parse_scaling_model(const std::string& text) {
    if (text == "power") return ScalingModel::power;
    if (text == "power_log") return ScalingModel::power_log;
    throw std::invalid_argument(fmt::format("unknown scaling model '{}'", text));
}

double t_quantile(double confidence, double dof) {
    if (!(dof > 0.0)) return std::numeric_limits<double>::infinity();
    boost::math::students_t dist(dof);
    return boost::math::quantile(dist, 0.5 + 0.5 * confidence);
}

ScalingFit scaling_fit(const std::vector<double>& eps, const std::vector<double>& values,
                       const std::vector<double>& standard_errors, ScalingModel model, const ScalingOptions& opts) {
    if (eps.size() != values.size() || eps.size() != standard_errors.size())
        throw std::invalid_argument("scaling_fit: series lengths differ");
    ScalingFit fit;
    fit.model = model;

    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < eps.size(); ++k) {
        if (!(eps[k] > 0.0) || !(values[k] > 0.0)) continue;
        if (standard_errors[k] / values[k] >= opts.max_relative_se) continue;
        if (model == ScalingModel::power_log && eps[k] >= 1.0) continue;
        keep.push_back(k);
    }
    fit.rungs = static_cast<int>(keep.size());
    if (fit.rungs < opts.min_rungs) {
        fit.reason = fmt::format("{} usable rungs, need {}", fit.rungs, opts.min_rungs);
        return fit;
    }

    const Eigen::Index n = fit.rungs;
    const Eigen::Index p = model == ScalingModel::power ? 2 : 3;
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n), w(n);
    double floor = std::numeric_limits<double>::infinity();
    for (const auto k : keep)
        if (standard_errors[k] > 0.0) floor = std::min(floor, standard_errors[k] / values[k]);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = keep[static_cast<std::size_t>(i)];
        x(i, 0) = 1.0;
        x(i, 1) = std::log(eps[k]);
        if (p == 3) x(i, 2) = std::log(std::abs(std::log(eps[k])));
        y(i) = std::log(values[k]);
        const double rel = std::isfinite(floor) ? std::max(standard_errors[k] / values[k], floor) : 1.0;
        w(i) = 1.0 / (rel * rel);
    }

    const Eigen::VectorXd sw = w.cwiseSqrt();
    const Eigen::MatrixXd xw = sw.asDiagonal() * x;
    const Eigen::VectorXd yw = sw.cwiseProduct(y);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
        fit.degenerate = true;
        fit.reason = "degenerate design (collinear ladder)";
        return fit;
    }
    const Eigen::VectorXd beta = qr.solve(yw);
    const Eigen::VectorXd resid = yw - xw * beta;
    const double dof = static_cast<double>(n - p);
    const double s2 = dof > 0 ? resid.squaredNorm() / dof : 0.0;
    const Eigen::MatrixXd cov = s2 * (xw.transpose() * xw).inverse();

    fit.ok = true;
    fit.c = std::exp(beta(0));
    fit.a = beta(1);
    fit.a_se = std::sqrt(std::max(0.0, cov(1, 1)));
    if (p == 3) {
        fit.b = beta(2);
        fit.b_se = std::sqrt(std::max(0.0, cov(2, 2)));
    }
    const double half = t_quantile(opts.confidence, dof) * fit.a_se;
    fit.a_low = fit.a - half;
    fit.a_high = fit.a + half;
    fit.residual = std::sqrt(resid.squaredNorm() / w.sum());
    fit.consistent_with_envelope = fit.a_high >= 0.9;
    return fit;
}

ScalingFit scaling_fit(const WindowScan& scan, ScalingModel model, const ScalingOptions& opts) {
    return scaling_fit(scan.epsilons, scan.mean, scan.standard_error, model, opts);
}

}  // namespace ccclab
