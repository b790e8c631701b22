#include "ccclab/experiments.hpp"

#include "ccclab/ccc.hpp"
#include "ccclab/ensemble.hpp"
#include "ccclab/localization.hpp"
#include "ccclab/spectral.hpp"
#include "ccclab/stats.hpp"
#include "ccclab/transport.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

namespace ccclab {

std::string format_number(double x) { return fmt::format("{:.17g}", x); }

Verdict Experiment::verdict(std::string name, bool passed, double value, std::string detail, bool hard) const {
    return Verdict{name_, std::move(name), passed, hard, value, std::move(detail)};
}

namespace {

struct Csv {
    std::string text;
    explicit Csv(const std::vector<std::string>& header) { line(header); }
    void line(const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) {
            if (k) text += ',';
            text += cells[k];
        }
        text += '\n';
    }
};

std::string num(double x) { return format_number(x); }
std::string num(std::size_t x) { return std::to_string(x); }

struct Context {
    LatticeSpec lattice;
    DisorderSpec disorder;
    std::string where;

    double bandwidth() const { return 2.0 * spectral_radius_bound(lattice, disorder); }
    double default_eps0() const {
        const double b = bandwidth();
        return b > 0.0 ? b / 8.0 : 1.0;
    }
    [[noreturn]] void fail(const std::string& msg) const { throw SchemaError(fmt::format("{}: {}", where, msg)); }

    int component(const Json& j, const char* key) const {
        const long c = get_integer(j, key, where, 1);
        if (c < 1 || c > lattice.dimension) fail(fmt::format("'{}' must be between 1 and {}", key, lattice.dimension));
        return static_cast<int>(c - 1);
    }
    void require_open(int axis, const std::string& what) const {
        if (lattice.periodic(axis)) fail(fmt::format("{} needs an open axis {}", what, axis + 1));
    }
    void require_all_open(const std::string& what) const {
        if (!lattice.all_open()) fail(what + " needs open boundaries");
    }
    double positive(const Json& j, const char* key, std::optional<double> fallback) const {
        const double x = get_number(j, key, where, fallback);
        if (!(x > 0.0)) fail(fmt::format("'{}' must be > 0", key));
        return x;
    }
    double fraction(const Json& j, const char* key, double fallback) const {
        const double x = get_number(j, key, where, fallback);
        if (!(x > 0.0 && x <= 1.0)) fail(fmt::format("'{}' must lie in (0, 1]", key));
        return x;
    }
    std::vector<double> positives(const Json& j, const char* key, std::vector<double> fallback) const {
        auto v = get_numbers(j, key, where, fallback);
        if (v.empty()) fail(fmt::format("'{}' must not be empty", key));
        for (const double x : v)
            if (!(x > 0.0) || !std::isfinite(x)) fail(fmt::format("'{}' entries must be positive", key));
        return v;
    }
    std::vector<double> numbers_or_one(const Json& j, const char* key, double fallback) const {
        if (j.contains(key) && j.at(key).is_number()) return {get_number(j, key, where)};
        auto v = get_numbers(j, key, where, std::vector<double>{fallback});
        if (v.empty()) fail(fmt::format("'{}' must not be empty", key));
        return v;
    }
    std::vector<double> ladder(const Json& j) const {
        const double eps0 = positive(j, "eps0", default_eps0());
        const long rungs = get_integer(j, "rungs", where, 8);
        if (rungs < 1 || rungs > 60) fail("'rungs' must lie in [1, 60]");
        return geometric_ladder(eps0, static_cast<int>(rungs));
    }
};

std::string component_label(int a, int b) { return fmt::format("{}{}", a + 1, b + 1); }

template <class D>
class Base : public Experiment {
public:
    using Experiment::Experiment;
    std::unique_ptr<Experiment> fresh() const override { return std::make_unique<D>(static_cast<const D&>(*this)); }
    void merge(const Experiment& other) override {
        static_cast<D*>(this)->merge_from(dynamic_cast<const D&>(other));
    }
};

Json fit_json(const ScalingFit& f) {
    return {{"model", to_string(f.model)}, {"ok", f.ok},          {"degenerate", f.degenerate},
            {"reason", f.reason},          {"c", f.c},            {"a", f.a},
            {"a_se", f.a_se},              {"a_low", f.a_low},    {"a_high", f.a_high},
            {"b", f.b},                    {"b_se", f.b_se},      {"residual", f.residual},
            {"rungs", f.rungs},            {"consistent_with_envelope", f.consistent_with_envelope}};
}

void scan_csv(ExperimentOutput& out, const std::string& file, const WindowScan& s) {
    Csv csv({"eps", "mean", "standard_error", "mean_levels"});
    for (std::size_t k = 0; k < s.epsilons.size(); ++k)
        csv.line({num(s.epsilons[k]), num(s.mean[k]), num(s.standard_error[k]), num(s.mean_levels[k])});
    out.files.emplace_back(file, csv.text);
}

void curve_csv(ExperimentOutput& out, const std::string& file, const TransportCurve& c) {
    Csv csv({"abscissa", "sigma_mean", "sigma_se", "component", "T"});
    for (std::size_t k = 0; k < c.abscissa.size(); ++k)
        csv.line({num(c.abscissa[k]), num(c.mean[k]), num(c.standard_error[k]), component_label(c.alpha, c.beta),
                  num(c.temperature)});
    out.files.emplace_back(file, csv.text);
}

// ---------------------------------------------------------------------------

class HistogramExperiment : public Base<HistogramExperiment> {
public:
    HistogramExperiment(const std::string& name, const Context& ctx, EnergyGrid grid, int alpha, int beta)
        : Base(std::string("ccc_histogram"), name), hist_(grid, alpha, beta),
          free_model_(ctx.disorder.strength == 0.0 && ctx.lattice.effective_flux() == 0.0 && ctx.lattice.periodic(0) &&
                      (ctx.lattice.dimension == 1 || ctx.lattice.periodic(1))) {}

    void add(const Realization& r) override { hist_.add(r); }
    void merge_from(const HistogramExperiment& o) { hist_.merge(o.hist_); }

    ExperimentOutput finish() const override {
        ExperimentOutput out;
        const auto& g = hist_.grid();
        Csv csv({"bin_lo_1", "bin_lo_2", "mean", "variance", "count", "imag_mean"});
        for (int p = 0; p < g.bins; ++p)
            for (int q = 0; q < g.bins; ++q)
                if (hist_.touched(p, q))
                    csv.line({num(g.bin_lower(p)), num(g.bin_lower(q)), num(hist_.mean(p, q)), num(hist_.variance(p, q)),
                              num(hist_.realizations()), num(hist_.imag_mean(p, q))});
        out.files.emplace_back(name() + ".csv", csv.text);
        out.summary = {{"component", component_label(hist_.alpha(), hist_.beta())},
                       {"bins", g.bins},
                       {"lower", g.lower},
                       {"upper", g.upper},
                       {"realizations", hist_.realizations()},
                       {"total_mass", hist_.total_mass()},
                       {"off_diagonal_mass", hist_.off_diagonal_mass()},
                       {"max_abs_off_diagonal", hist_.max_abs_off_diagonal()},
                       {"overflow", hist_.overflow()},
                       {"min_bin_value", hist_.min_bin_value()}};
        out.verdicts.push_back(verdict("grid_covers_spectrum", hist_.overflow() == 0,
                                       static_cast<double>(hist_.overflow()), "eigenvalues outside the grid"));
        if (hist_.alpha() == hist_.beta())
            out.verdicts.push_back(verdict("positivity", hist_.min_bin_value() >= -1e-12, hist_.min_bin_value(),
                                           "most negative bin weight of any realization"));
        if (free_model_)
            out.verdicts.push_back(verdict("free_model_diagonal", hist_.max_abs_off_diagonal() <= 1e-12,
                                           hist_.max_abs_off_diagonal(), "largest off-diagonal bin"));
        return out;
    }

    static std::unique_ptr<Experiment> parse(const Json& j, const Context& ctx, const std::string& name) {
        allow_keys(j, ctx.where, {"type", "name", "bins", "alpha", "beta", "lower", "upper"});
        const long bins = get_integer(j, "bins", ctx.where, 512);
        if (bins < 1 || bins > 4096) ctx.fail("'bins' must lie in [1, 4096]");
        EnergyGrid grid = default_ccc_grid(ctx.lattice, ctx.disorder, static_cast<int>(bins));
        grid.lower = get_number(j, "lower", ctx.where, grid.lower);
        grid.upper = get_number(j, "upper", ctx.where, grid.upper);
        if (!(grid.lower < grid.upper)) ctx.fail("'lower' must be below 'upper'");
        return std::make_unique<HistogramExperiment>(name, ctx, grid, ctx.component(j, "alpha"),
                                                     ctx.component(j, "beta"));
    }

private:
    CccHistogram hist_;
    bool free_model_;
};

// ---------------------------------------------------------------------------

class ScanExperiment : public Base<ScanExperiment> {
public:
    ScanExperiment(const std::string& type, const std::string& name, ScanAccumulator acc, ScalingModel model)
        : Base(type, name), acc_(std::move(acc)), model_(model) {}

    void add(const Realization& r) override { acc_.add(r); }
    void merge_from(const ScanExperiment& o) { acc_.merge(o.acc_); }

    ExperimentOutput finish() const override {
        ExperimentOutput out;
        const auto scan = acc_.result();
        scan_csv(out, name() + ".csv", scan);
        const auto fit = scaling_fit(scan, model_);
        double lowest = 0.0;
        for (const double v : scan.mean) lowest = std::min(lowest, v);
        out.summary = {{"anchor", scan.anchor},
                       {"variant", to_string(scan.variant)},
                       {"centered", scan.centered},
                       {"realizations", scan.realizations},
                       {"fit", fit_json(fit)}};
        out.verdicts.push_back(verdict("nonnegative", lowest >= -1e-12, lowest, "smallest scan value"));
        out.verdicts.push_back(verdict("fit_exponent_positive", fit.ok && fit.a_low > 0.0, fit.a,
                                       "lower 95% bound of the fitted exponent above 0", false));
        return out;
    }

    static std::unique_ptr<Experiment> parse(const Json& j, const Context& ctx, const std::string& name,
                                             ScanVariant variant) {
        const std::string type = variant == ScanVariant::diagonal ? "diagonal_scan" : "box_scan";
        if (variant == ScanVariant::diagonal)
            allow_keys(j, ctx.where, {"type", "name", "anchor", "eps0", "rungs", "centered", "fit"});
        else
            allow_keys(j, ctx.where, {"type", "name", "anchor", "eps0", "rungs", "fit"});
        const double anchor = get_number(j, "anchor", ctx.where, 0.0);
        const bool centered = get_bool(j, "centered", ctx.where, false);
        ScalingModel model;
        try {
            model = parse_scaling_model(get_string(j, "fit", ctx.where, "power"));
        } catch (const std::invalid_argument& e) {
            ctx.fail(e.what());
        }
        return std::make_unique<ScanExperiment>(type, name, ScanAccumulator(anchor, ctx.ladder(j), variant, centered),
                                                model);
    }

private:
    ScanAccumulator acc_;
    ScalingModel model_;
};

// ---------------------------------------------------------------------------

class DcDensityExperiment : public Base<DcDensityExperiment> {
public:
    DcDensityExperiment(const std::string& name, ScanAccumulator acc)
        : Base(std::string("dc_density"), name), acc_(std::move(acc)) {}

    void add(const Realization& r) override { acc_.add(r); }
    void merge_from(const DcDensityExperiment& o) { acc_.merge(o.acc_); }

    ExperimentOutput finish() const override {
        ExperimentOutput out;
        const auto scan = acc_.result();
        scan_csv(out, name() + ".csv", scan);
        const auto dc = dc_density(scan);
        out.summary = {{"anchor", scan.anchor},
                       {"estimate", dc.estimate},
                       {"standard_error", dc.standard_error},
                       {"growth_exponent", dc.growth_exponent},
                       {"fitted_rungs", dc.fitted_rungs},
                       {"divergent", dc.divergent},
                       {"realizations", scan.realizations}};
        out.verdicts.push_back(verdict("nonnegative", dc.estimate >= -1e-12, dc.estimate, "density estimate"));
        return out;
    }

    static std::unique_ptr<Experiment> parse(const Json& j, const Context& ctx, const std::string& name) {
        allow_keys(j, ctx.where, {"type", "name", "anchor", "eps0", "rungs"});
        const double anchor = get_number(j, "anchor", ctx.where, 0.0);
        return std::make_unique<DcDensityExperiment>(name, ScanAccumulator(anchor, ctx.ladder(j), ScanVariant::diagonal));
    }

private:
    ScanAccumulator acc_;
};

// ---------------------------------------------------------------------------

class AcExperiment : public Base<AcExperiment> {
public:
    AcExperiment(const std::string& name, KuboParameters p, std::vector<double> nu)
        : Base(std::string("ac_conductivity"), name), p_(p), nu_(nu),
          curve_(Abscissa::frequency, std::move(nu), p.alpha, p.beta, p.temperature) {}

    void add(const Realization& r) override {
        const auto values = ac_conductivity(r, nu_, p_);
        for (const double v : values) lowest_ = std::min(lowest_, v);
        curve_.add(values);
    }
    void merge_from(const AcExperiment& o) {
        curve_.merge(o.curve_);
        lowest_ = std::min(lowest_, o.lowest_);
    }

    ExperimentOutput finish() const override {
        ExperimentOutput out;
        const auto c = curve_.result();
        curve_csv(out, name() + ".csv", c);
        out.summary = {{"e_fermi", p_.e_fermi},
                       {"temperature", p_.temperature},
                       {"regulator", p_.regulator},
                       {"component", component_label(p_.alpha, p_.beta)},
                       {"realizations", c.realizations}};
        out.verdicts.push_back(verdict("finite", std::all_of(c.mean.begin(), c.mean.end(), [](double v) {
                                           return std::isfinite(v);
                                       }),
                                       0.0));
        if (p_.alpha == p_.beta)
            out.verdicts.push_back(verdict("nonnegative", lowest_ >= -1e-12, lowest_, "smallest per-realization value"));
        return out;
    }

    static std::unique_ptr<Experiment> parse(const Json& j, const Context& ctx, const std::string& name) {
        allow_keys(j, ctx.where, {"type", "name", "nu", "temperature", "e_fermi", "regulator", "alpha", "beta"});
        KuboParameters p;
        p.e_fermi = get_number(j, "e_fermi", ctx.where, 0.0);
        p.temperature = get_number(j, "temperature", ctx.where, 0.0);
        if (p.temperature < 0.0) ctx.fail("'temperature' must be >= 0");
        p.regulator = ctx.positive(j, "regulator", 0.1);
        p.alpha = ctx.component(j, "alpha");
        p.beta = ctx.component(j, "beta");
        auto nu = get_numbers(j, "nu", ctx.where, std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0});
        if (nu.empty()) ctx.fail("'nu' must not be empty");
        return std::make_unique<AcExperiment>(name, p, std::move(nu));
    }

private:
    KuboParameters p_;
    std::vector<double> nu_;
    CurveAccumulator curve_;
    double lowest_ = 0.0;
};

// ---------------------------------------------------------------------------

class GreensExperiment : public Base<GreensExperiment> {
public:
    GreensExperiment(const std::string& name, double e_fermi, std::vector<double> eta, int alpha, int beta, double window)
        : Base(std::string("greens"), name), e_fermi_(e_fermi), eta_(eta), alpha_(alpha), beta_(beta),
          window_(window), curve_(Abscissa::regulator, std::move(eta), alpha, beta, 0.0) {}

    void add(const Realization& r) override {
        const auto w = TraceWindow::central(r.lattice, window_);
        std::vector<double> values;
        for (const double eta : eta_) {
            const double g = greens_conductivity(r, e_fermi_, eta, alpha_, beta_, w);
            values.push_back(g);
            if (alpha_ == beta_) lowest_ = std::min(lowest_, g);
            if (w.covers_lattice()) {
                const double l = greens_lorentzian_ratio(r.dimension()) * lorentzian_ccc(r, e_fermi_, eta, alpha_, beta_);
                identity_gap_ = std::max(identity_gap_, std::abs(g - l) / std::max(1.0, std::abs(g)));
            }
        }
        curve_.add(values);
    }
    void merge_from(const GreensExperiment& o) {
        curve_.merge(o.curve_);
        lowest_ = std::min(lowest_, o.lowest_);
        identity_gap_ = std::max(identity_gap_, o.identity_gap_);
    }

    ExperimentOutput finish() const override {
        ExperimentOutput out;
        const auto c = curve_.result();
        curve_csv(out, name() + ".csv", c);
        out.summary = {{"e_fermi", e_fermi_},
                       {"window", window_},
                       {"component", component_label(alpha_, beta_)},
                       {"realizations", c.realizations}};
        if (window_ == 1.0) {
            out.summary["identity_gap"] = identity_gap_;
            out.verdicts.push_back(verdict("greens_lorentzian_identity", identity_gap_ <= 1e-9, identity_gap_,
                                           "relative gap between the Green's function and Lorentzian routes"));
        }
        if (alpha_ == beta_)
            out.verdicts.push_back(verdict("nonnegative", lowest_ >= -1e-12, lowest_, "smallest per-realization value"));
        else
            out.verdicts.push_back(verdict("finite", true, 0.0));
        return out;
    }

    static std::unique_ptr<Experiment> parse(const Json& j, const Context& ctx, const std::string& name) {
        allow_keys(j, ctx.where, {"type", "name", "e_fermi", "eta", "alpha", "beta", "window"});
        const int a = ctx.component(j, "alpha");
        const int b = ctx.component(j, "beta");
        ctx.require_open(a, "greens");
        ctx.require_open(b, "greens");
        return std::make_unique<GreensExperiment>(name, get_number(j, "e_fermi", ctx.where, 0.0),
                                                  ctx.positives(j, "eta", {0.1, 0.05, 0.025, 0.0125}), a, b,
                                                  ctx.fraction(j, "window", 0.6));
    }

private:
    double e_fermi_;
    std::vector<double> eta_;
    int alpha_, beta_;
    double window_;
    CurveAccumulator curve_;
    double lowest_ = 0.0;
    double identity_gap_ = 0.0;
};

// ---------------------------------------------------------------------------

class LiouvillianExperiment : public Base<LiouvillianExperiment> {
public:
    LiouvillianExperiment(const std::string& name, LiouvillianParameters p, std::vector<double> nu, bool symmetric)
        : Base(std::string("liouvillian"), name), p_(p), nu_(nu), symmetric_model_(symmetric),
          re_(Abscissa::frequency, nu, p.alpha, p.beta, p.temperature),
          im_(Abscissa::frequency, std::move(nu), p.alpha, p.beta, p.temperature) {}

    void add(const Realization& r) override {
        std::vector<double> re, im;
        for (const double f : nu_) {
            auto p = p_;
            p.nu = f;
            const Complex s = liouvillian_conductivity(r, p);
            re.push_back(s.real());
            im.push_back(s.imag());
            if (p_.alpha != p_.beta) {
                std::swap(p.alpha, p.beta);
                const Complex t = liouvillian_conductivity(r, p);
                hall_ = std::max(hall_, std::abs(0.5 * (s - t)));
            } else {
                lowest_ = std::min(lowest_, s.real());
            }
        }
        re_.add(re);
        im_.add(im);
    }
    void merge_from(const LiouvillianExperiment& o) {
        re_.merge(o.re_);
        im_.merge(o.im_);
        hall_ = std::max(hall_, o.hall_);
        lowest_ = std::min(lowest_, o.lowest_);
    }

    ExperimentOutput finish() const override {
        ExperimentOutput out;
        const auto re = re_.result();
        const auto im = im_.result();
        Csv csv({"abscissa", "re_mean", "re_se", "im_mean", "im_se", "component", "T"});
        for (std::size_t k = 0; k < nu_.size(); ++k)
            csv.line({num(nu_[k]), num(re.mean[k]), num(re.standard_error[k]), num(im.mean[k]),
                      num(im.standard_error[k]), component_label(p_.alpha, p_.beta), num(p_.temperature)});
        out.files.emplace_back(name() + ".csv", csv.text);
        out.summary = {{"e_fermi", p_.e_fermi},   {"temperature", p_.temperature},
                       {"eta", p_.eta},           {"relaxation", p_.relaxation},
                       {"component", component_label(p_.alpha, p_.beta)},
                       {"realizations", re.realizations}};
        if (p_.alpha != p_.beta) {
            out.summary["max_antisymmetric_part"] = hall_;
            if (symmetric_model_)
                out.verdicts.push_back(verdict("time_reversal_hall_zero", hall_ <= 1e-10, hall_,
                                               "antisymmetric part of the off-diagonal component"));
            else
                out.verdicts.push_back(verdict("finite", std::isfinite(hall_), hall_));
        } else {
            out.verdicts.push_back(verdict("nonnegative_real_part", lowest_ >= -1e-12, lowest_));
        }
        return out;
    }

    static std::unique_ptr<Experiment> parse(const Json& j, const Context& ctx, const std::string& name) {
        allow_keys(j, ctx.where,
                   {"type", "name", "e_fermi", "temperature", "eta", "relaxation", "nu", "alpha", "beta"});
        LiouvillianParameters p;
        p.e_fermi = get_number(j, "e_fermi", ctx.where, 0.0);
        p.temperature = get_number(j, "temperature", ctx.where, 0.0);
        p.eta = get_number(j, "eta", ctx.where, 0.05);
        p.relaxation = get_number(j, "relaxation", ctx.where, 0.0);
        if (p.temperature < 0.0 || p.eta < 0.0 || p.relaxation < 0.0)
            ctx.fail("'temperature', 'eta' and 'relaxation' must be >= 0");
        if (!(p.eta + p.relaxation > 0.0)) ctx.fail("one of 'eta' or 'relaxation' must be positive");
        p.alpha = ctx.component(j, "alpha");
        p.beta = ctx.component(j, "beta");
        auto nu = get_numbers(j, "nu", ctx.where, std::vector<double>{0.0});
        if (nu.empty()) ctx.fail("'nu' must not be empty");
        const bool symmetric = ctx.lattice.effective_flux() == 0.0;
        return std::make_unique<LiouvillianExperiment>(name, p, std::move(nu), symmetric);
    }

private:
    LiouvillianParameters p_;
    std::vector<double> nu_;
    bool symmetric_model_;
    CurveAccumulator re_, im_;
    double hall_ = 0.0;
    double lowest_ = 0.0;
};

// ---------------------------------------------------------------------------

class StredaExperiment : public Base<StredaExperiment> {
public:
    StredaExperiment(const std::string& name, std::vector<double> e_fermi, double window, bool symmetric)
        : Base(std::string("streda"), name), e_fermi_(std::move(e_fermi)), window_(window),
          symmetric_model_(symmetric), stats_(e_fermi_.size()) {}

    void add(const Realization& r) override {
        const auto w = TraceWindow::central(r.lattice, window_);
        for (std::size_t k = 0; k < e_fermi_.size(); ++k) {
            const double c = streda_marker(fermi_projector(r.eig, e_fermi_[k]), r.lattice, w);
            stats_[k].add(c);
            largest_ = std::max(largest_, std::abs(c));
        }
    }
    void merge_from(const StredaExperiment& o) {
        for (std::size_t k = 0; k < stats_.size(); ++k) stats_[k].merge(o.stats_[k]);
        largest_ = std::max(largest_, o.largest_);
    }

    ExperimentOutput finish() const override {
        ExperimentOutput out;
        Csv csv({"e_fermi", "marker_mean", "marker_se", "window"});
        Json values = Json::array();
        for (std::size_t k = 0; k < e_fermi_.size(); ++k) {
            csv.line({num(e_fermi_[k]), num(stats_[k].mean), num(stats_[k].standard_error()), num(window_)});
            values.push_back({{"e_fermi", e_fermi_[k]}, {"marker", stats_[k].mean}, {"se", stats_[k].standard_error()}});
        }
        out.files.emplace_back(name() + ".csv", csv.text);
        out.summary = {{"window", window_}, {"markers", values}, {"realizations", stats_.front().count}};
        if (symmetric_model_)
            out.verdicts.push_back(verdict("time_reversal_hall_zero", largest_ <= 1e-10, largest_,
                                           "largest marker without flux"));
        else
            out.verdicts.push_back(verdict("finite", std::isfinite(largest_), largest_));
        return out;
    }

    static std::unique_ptr<Experiment> parse(const Json& j, const Context& ctx, const std::string& name) {
        allow_keys(j, ctx.where, {"type", "name", "e_fermi", "window"});
        if (ctx.lattice.dimension != 2) ctx.fail("streda needs a 2-d lattice");
        ctx.require_all_open("streda");
        return std::make_unique<StredaExperiment>(name, ctx.numbers_or_one(j, "e_fermi", 0.0),
                                                  ctx.fraction(j, "window", 0.4),
                                                  ctx.lattice.effective_flux() == 0.0);
    }

private:
    std::vector<double> e_fermi_;
    double window_;
    bool symmetric_model_;
    std::vector<RunningStats> stats_;
    double largest_ = 0.0;
};

// ---------------------------------------------------------------------------

class KernelExperiment : public Base<KernelExperiment> {
public:
    KernelExperiment(const std::string& name, double e_fermi, double window)
        : Base(std::string("fermi_kernel"), name), e_fermi_(e_fermi), window_(window) {}

    void add(const Realization& r) override {
        const auto k = fermi_kernel_profile(fermi_projector(r.eig, e_fermi_), r.lattice,
                                            TraceWindow::central(r.lattice, window_));
        if (profile_.empty()) {
            distance_ = k.distance;
            pairs_ = k.pairs;
            profile_.resize(k.profile.size());
        }
        for (std::size_t i = 0; i < k.profile.size(); ++i) {
            profile_[i].add(k.profile[i]);
            lowest_ = std::min(lowest_, k.profile[i]);
        }
        moment_.add(k.second_moment);
        lowest_moment_ = std::min(lowest_moment_, k.second_moment);
    }
    void merge_from(const KernelExperiment& o) {
        if (profile_.empty()) {
            distance_ = o.distance_;
            pairs_ = o.pairs_;
            profile_.resize(o.profile_.size());
        }
        for (std::size_t i = 0; i < o.profile_.size(); ++i) profile_[i].merge(o.profile_[i]);
        moment_.merge(o.moment_);
        lowest_ = std::min(lowest_, o.lowest_);
        lowest_moment_ = std::min(lowest_moment_, o.lowest_moment_);
    }

    ExperimentOutput finish() const override {
        ExperimentOutput out;
        KernelProfile mean;
        mean.distance = distance_;
        mean.pairs = pairs_;
        Csv csv({"distance", "profile_mean", "profile_se", "pairs"});
        for (std::size_t i = 0; i < profile_.size(); ++i) {
            mean.profile.push_back(profile_[i].mean);
            csv.line({std::to_string(distance_[i]), num(profile_[i].mean), num(profile_[i].standard_error()),
                      num(pairs_[i])});
        }
        fit_kernel_decay(mean);
        out.files.emplace_back(name() + ".csv", csv.text);
        out.summary = {{"e_fermi", e_fermi_},
                       {"window", window_},
                       {"second_moment", moment_.mean},
                       {"second_moment_se", moment_.standard_error()},
                       {"fit", {{"fitted", mean.fitted},
                                {"rate", mean.rate},
                                {"amplitude", mean.amplitude},
                                {"residual", mean.fit_residual},
                                {"shells", mean.fit_shells}}},
                       {"realizations", moment_.count}};
        out.verdicts.push_back(verdict("profile_nonnegative", lowest_ >= 0.0, lowest_));
        out.verdicts.push_back(verdict("second_moment_nonnegative", lowest_moment_ >= 0.0, lowest_moment_));
        out.verdicts.push_back(verdict("decay_rate_positive", mean.fitted && mean.rate > 0.0, mean.rate,
                                       "exponential fit of the mean profile", false));
        return out;
    }

    static std::unique_ptr<Experiment> parse(const Json& j, const Context& ctx, const std::string& name) {
        allow_keys(j, ctx.where, {"type", "name", "e_fermi", "window"});
        ctx.require_all_open("fermi_kernel");
        return std::make_unique<KernelExperiment>(name, get_number(j, "e_fermi", ctx.where, 0.0),
                                                  ctx.fraction(j, "window", 0.6));
    }

private:
    double e_fermi_;
    double window_;
    std::vector<int> distance_;
    std::vector<std::size_t> pairs_;
    std::vector<RunningStats> profile_;
    RunningStats moment_;
    double lowest_ = 0.0;
    double lowest_moment_ = 0.0;
};

// ---------------------------------------------------------------------------

class ResponseExperiment : public Base<ResponseExperiment> {
public:
    ResponseExperiment(const std::string& name, double e_fermi, double field, std::vector<double> times, bool real_model)
        : Base(std::string("linear_response"), name), e_fermi_(e_fermi), field_(field), times_(times),
          real_model_(real_model), current_(Abscissa::time, std::move(times), 0, 0, 0.0) {}

    void add(const Realization& r) override {
        const auto lr = linear_response_current(r, e_fermi_, field_, times_);
        current_.add(lr.current);
        sigma_.add(lr.sigma);
        sigma_half_.add(lr.sigma_half);
        nonlinearity_.add(lr.nonlinearity);
        weak_ = weak_ && lr.weak_field;
        initial_ = std::max(initial_, std::abs(lr.current.front()));
    }
    void merge_from(const ResponseExperiment& o) {
        current_.merge(o.current_);
        sigma_.merge(o.sigma_);
        sigma_half_.merge(o.sigma_half_);
        nonlinearity_.merge(o.nonlinearity_);
        weak_ = weak_ && o.weak_;
        initial_ = std::max(initial_, o.initial_);
    }

    ExperimentOutput finish() const override {
        ExperimentOutput out;
        const auto c = current_.result();
        Csv csv({"time", "current_mean", "current_se"});
        for (std::size_t k = 0; k < times_.size(); ++k)
            csv.line({num(times_[k]), num(c.mean[k]), num(c.standard_error[k])});
        out.files.emplace_back(name() + ".csv", csv.text);
        out.summary = {{"e_fermi", e_fermi_},
                       {"field", field_},
                       {"sigma", sigma_.mean},
                       {"sigma_se", sigma_.standard_error()},
                       {"sigma_half_field", sigma_half_.mean},
                       {"nonlinearity", nonlinearity_.mean},
                       {"weak_field", weak_},
                       {"realizations", sigma_.count}};
        if (real_model_ && times_.front() == 0.0)
            out.verdicts.push_back(verdict("initial_current_zero", initial_ <= 1e-10, initial_,
                                           "|J(0)| for a real Hamiltonian"));
        else
            out.verdicts.push_back(verdict("finite", std::isfinite(sigma_.mean), sigma_.mean));
        out.verdicts.push_back(verdict("weak_field", weak_, field_, "field * L_1 <= 0.1 * bandwidth", false));
        return out;
    }

    static std::unique_ptr<Experiment> parse(const Json& j, const Context& ctx, const std::string& name) {
        allow_keys(j, ctx.where, {"type", "name", "e_fermi", "field", "t_max", "points"});
        ctx.require_open(0, "linear_response");
        const double t_max = ctx.positive(j, "t_max", 50.0);
        const long points = get_integer(j, "points", ctx.where, 101);
        if (points < 2) ctx.fail("'points' must be >= 2");
        std::vector<double> times;
        for (long k = 0; k < points; ++k) times.push_back(t_max * static_cast<double>(k) / static_cast<double>(points - 1));
        const bool real_model = ctx.lattice.effective_flux() == 0.0;
        return std::make_unique<ResponseExperiment>(name, get_number(j, "e_fermi", ctx.where, 0.0),
                                                    get_number(j, "field", ctx.where, 0.01), std::move(times),
                                                    real_model);
    }

private:
    double e_fermi_;
    double field_;
    std::vector<double> times_;
    bool real_model_;
    CurveAccumulator current_;
    RunningStats sigma_, sigma_half_, nonlinearity_;
    bool weak_ = true;
    double initial_ = 0.0;
};

// ---------------------------------------------------------------------------

class LocLengthExperiment : public Base<LocLengthExperiment> {
public:
    struct Options {
        std::vector<EnergyInterval> windows;
        std::vector<double> averaging_times;
        std::optional<std::pair<std::vector<double>, double>> sweep;
        std::optional<std::pair<double, std::vector<double>>> vanishing;
    };

    LocLengthExperiment(const std::string& name, Options opt, int dimension)
        : Base(std::string("loclength"), name), opt_(std::move(opt)), dimension_(dimension) {
        const auto cells = opt_.windows.size() * static_cast<std::size_t>(dimension_);
        spectral_.resize(cells);
        moment_.resize(cells);
        excluded_.resize(cells);
        ratio_.assign(cells, 0.0);
        time_.assign(opt_.windows.size(), std::vector<RunningStats>(opt_.averaging_times.size()));
        if (opt_.sweep) sweep_.emplace(opt_.sweep->first, opt_.sweep->second);
        if (opt_.vanishing) vanish_.emplace(opt_.vanishing->first, opt_.vanishing->second);
    }

    void add(const Realization& r) override {
        for (std::size_t w = 0; w < opt_.windows.size(); ++w) {
            const auto rep = localization_report(r, opt_.windows[w], opt_.averaging_times);
            for (int a = 0; a < dimension_; ++a) {
                const auto c = w * static_cast<std::size_t>(dimension_) + static_cast<std::size_t>(a);
                const auto ua = static_cast<std::size_t>(a);
                spectral_[c].add(rep.ell2_spectral[ua]);
                moment_[c].add(rep.ell2_moment[ua]);
                excluded_[c].add(rep.excluded[ua]);
                ratio_[c] = std::max(ratio_[c], rep.bound_ratio[ua]);
                const double gap = std::abs(rep.ell2_spectral[ua] + rep.excluded[ua] - rep.ell2_moment[ua]) /
                                   std::max(1.0, rep.ell2_moment[ua]);
                route_gap_ = std::max(route_gap_, gap);
                lowest_ = std::min({lowest_, rep.ell2_spectral[ua], rep.ell2_moment[ua]});
            }
            for (std::size_t t = 0; t < rep.ell2_time.size(); ++t) time_[w][t].add(rep.ell2_time[t]);
        }
        if (sweep_) sweep_->add(r);
        if (vanish_) vanish_->add(r);
    }
    void merge_from(const LocLengthExperiment& o) {
        for (std::size_t c = 0; c < spectral_.size(); ++c) {
            spectral_[c].merge(o.spectral_[c]);
            moment_[c].merge(o.moment_[c]);
            excluded_[c].merge(o.excluded_[c]);
            ratio_[c] = std::max(ratio_[c], o.ratio_[c]);
        }
        for (std::size_t w = 0; w < time_.size(); ++w)
            for (std::size_t t = 0; t < time_[w].size(); ++t) time_[w][t].merge(o.time_[w][t]);
        route_gap_ = std::max(route_gap_, o.route_gap_);
        lowest_ = std::min(lowest_, o.lowest_);
        if (sweep_) sweep_->merge(*o.sweep_);
        if (vanish_) vanish_->merge(*o.vanish_);
    }

    ExperimentOutput finish() const override {
        ExperimentOutput out;
        Csv csv({"lower", "upper", "axis", "ell2_spectral", "ell2_spectral_se", "ell2_moment", "ell2_moment_se",
                 "excluded", "bound_ratio_max"});
        double worst_ratio = 0.0;
        for (std::size_t w = 0; w < opt_.windows.size(); ++w)
            for (int a = 0; a < dimension_; ++a) {
                const auto c = w * static_cast<std::size_t>(dimension_) + static_cast<std::size_t>(a);
                csv.line({num(opt_.windows[w].lower), num(opt_.windows[w].upper), std::to_string(a + 1),
                          num(spectral_[c].mean), num(spectral_[c].standard_error()), num(moment_[c].mean),
                          num(moment_[c].standard_error()), num(excluded_[c].mean), num(ratio_[c])});
                worst_ratio = std::max(worst_ratio, ratio_[c]);
            }
        out.files.emplace_back(name() + ".csv", csv.text);
        out.summary = {{"route_gap", route_gap_}, {"max_bound_ratio", worst_ratio},
                       {"realizations", spectral_.empty() ? 0 : spectral_.front().count}};

        if (!opt_.averaging_times.empty()) {
            Csv t({"lower", "upper", "averaging_time", "ell2_time", "ell2_time_se"});
            for (std::size_t w = 0; w < opt_.windows.size(); ++w)
                for (std::size_t k = 0; k < opt_.averaging_times.size(); ++k)
                    t.line({num(opt_.windows[w].lower), num(opt_.windows[w].upper), num(opt_.averaging_times[k]),
                            num(time_[w][k].mean), num(time_[w][k].standard_error())});
            out.files.emplace_back(name() + "_time.csv", t.text);
        }
        out.verdicts.push_back(verdict("nonnegative", lowest_ >= 0.0, lowest_));
        out.verdicts.push_back(verdict("spectral_moment_identity", route_gap_ <= 1e-9, route_gap_,
                                       "relative gap after adding back degenerate pairs"));
        out.verdicts.push_back(verdict("ccc_bound", worst_ratio <= 1.0 + 1e-9, worst_ratio, "M / (|D|^2 l^2)"));
        if (sweep_) {
            out.summary["sweep"] = {{"max_ratio", sweep_->max_ratio()}, {"intervals", sweep_->intervals()}};
            out.verdicts.push_back(verdict("ccc_bound_sweep", sweep_->max_ratio() <= 1.0 + 1e-9, sweep_->max_ratio(),
                                           "largest ratio over sliding intervals"));
        }
        if (vanish_) {
            const auto rep = vanish_->result();
            Csv v({"eps", "scaled_measure", "scaled_measure_se", "ell2", "ell2_se", "worst_ratio", "holds"});
            for (const auto& rung : rep.rungs)
                v.line({num(rung.eps), num(rung.scaled_measure), num(rung.scaled_measure_se), num(rung.ell2),
                        num(rung.ell2_se), num(rung.worst_ratio), rung.holds ? "1" : "0"});
            out.files.emplace_back(name() + "_vanishing.csv", v.text);
            double worst = 0.0;
            for (const auto& rung : rep.rungs) worst = std::max(worst, rung.worst_ratio);
            out.summary["vanishing"] = {{"anchor", rep.anchor}, {"holds", rep.holds()}, {"worst_ratio", worst}};
            out.verdicts.push_back(verdict("vanishing_chain", rep.holds(), worst, "(2/eps^2) M <= l^2 on every rung"));
        }
        return out;
    }

    static std::unique_ptr<Experiment> parse(const Json& j, const Context& ctx, const std::string& name) {
        allow_keys(j, ctx.where, {"type", "name", "windows", "averaging_times", "sweep", "vanishing"});
        ctx.require_all_open("loclength");
        Options opt;
        if (j.contains("windows")) {
            const auto& ws = j.at("windows");
            if (!ws.is_array() || ws.empty()) ctx.fail("'windows' must be a non-empty array of [lower, upper] pairs");
            for (const auto& w : ws) {
                if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number())
                    ctx.fail("'windows' entries must be [lower, upper]");
                const double lo = w[0].get<double>(), hi = w[1].get<double>();
                if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) ctx.fail("window needs lower < upper");
                opt.windows.push_back(EnergyInterval::half_open(lo, hi));
            }
        } else {
            opt.windows.push_back(EnergyInterval::half_open(-0.5, 0.5));
        }
        opt.averaging_times = get_numbers(j, "averaging_times", ctx.where, std::vector<double>{});
        for (std::size_t k = 0; k < opt.averaging_times.size(); ++k)
            if (!(opt.averaging_times[k] > 0.0) || (k > 0 && opt.averaging_times[k] <= opt.averaging_times[k - 1]))
                ctx.fail("'averaging_times' must be positive and increasing");
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            Context sub = ctx;
            sub.where = ctx.where + ".sweep";
            allow_keys(s, sub.where, {"widths", "step"});
            opt.sweep.emplace(sub.positives(s, "widths", {0.1, 0.5}), sub.positive(s, "step", 0.05));
        }
        if (j.contains("vanishing")) {
            const auto& s = j.at("vanishing");
            Context sub = ctx;
            sub.where = ctx.where + ".vanishing";
            allow_keys(s, sub.where, {"anchor", "eps0", "rungs"});
            auto ladder = sub.ladder(s);
            if (ladder.size() < 2) sub.fail("needs at least two rungs");
            opt.vanishing.emplace(get_number(s, "anchor", sub.where, 0.0), std::move(ladder));
        }
        return std::make_unique<LocLengthExperiment>(name, std::move(opt), ctx.lattice.dimension);
    }

private:
    Options opt_;
    int dimension_;
    std::vector<RunningStats> spectral_, moment_, excluded_;
    std::vector<double> ratio_;
    std::vector<std::vector<RunningStats>> time_;
    double route_gap_ = 0.0;
    double lowest_ = 0.0;
    std::optional<BoundSweep> sweep_;
    std::optional<VanishingAccumulator> vanish_;
};

// ---------------------------------------------------------------------------

class WegnerExperiment : public Base<WegnerExperiment> {
public:
    WegnerExperiment(const std::string& name, WegnerAccumulator acc, double bound, double margin)
        : Base(std::string("wegner"), name), acc_(std::move(acc)), bound_(bound), margin_(margin) {}

    void add(const Realization& r) override { acc_.add(r); }
    void merge_from(const WegnerExperiment& o) { acc_.merge(o.acc_); }

    ExperimentOutput finish() const override {
        ExperimentOutput out;
        const auto rep = acc_.result(bound_, margin_);
        Csv csv({"width", "mean", "standard_error"});
        for (std::size_t k = 0; k < rep.widths.size(); ++k)
            csv.line({num(rep.widths[k]), num(rep.mean[k]), num(rep.standard_error[k])});
        out.files.emplace_back(name() + ".csv", csv.text);
        out.summary = {{"anchor", rep.anchor},          {"density_bound", rep.density_bound},
                       {"margin", rep.margin},          {"plateau", rep.plateau},
                       {"bounded", rep.bounded},        {"realizations", rep.realizations}};
        double lowest = 0.0;
        for (const double v : rep.mean) lowest = std::min(lowest, v);
        out.verdicts.push_back(verdict("nonnegative", lowest >= 0.0, lowest));
        out.verdicts.push_back(verdict("plateau", rep.plateau, 0.0, "max <= 2 min across the ladder", false));
        out.verdicts.push_back(verdict("bounded", rep.bounded, rep.density_bound, "means <= rho_inf (1 + margin)", false));
        return out;
    }

    static std::unique_ptr<Experiment> parse(const Json& j, const Context& ctx, const std::string& name) {
        allow_keys(j, ctx.where, {"type", "name", "anchor", "widths", "window", "margin"});
        const double margin = get_number(j, "margin", ctx.where, 0.25);
        if (margin < 0.0) ctx.fail("'margin' must be >= 0");
        WegnerAccumulator acc(get_number(j, "anchor", ctx.where, 0.0),
                              ctx.positives(j, "widths", {0.4, 0.2, 0.1, 0.05, 0.025}), ctx.fraction(j, "window", 0.6));
        return std::make_unique<WegnerExperiment>(name, std::move(acc), ctx.disorder.density_bound(), margin);
    }

private:
    WegnerAccumulator acc_;
    double bound_;
    double margin_;
};

// ---------------------------------------------------------------------------

class MinamiExperiment : public Base<MinamiExperiment> {
public:
    MinamiExperiment(const std::string& name, MinamiAccumulator acc, double bound, std::size_t sites)
        : Base(std::string("minami"), name), acc_(std::move(acc)), bound_(bound), sites_(sites) {}

    bool needs_vectors() const override { return false; }
    void add(const Realization& r) override { acc_.add(r); }
    void merge_from(const MinamiExperiment& o) { acc_.merge(o.acc_); }

    ExperimentOutput finish() const override {
        ExperimentOutput out;
        const auto rep = acc_.result(bound_, sites_);
        Csv csv({"width", "mean", "standard_error", "bound"});
        for (std::size_t k = 0; k < rep.widths.size(); ++k)
            csv.line({num(rep.widths[k]), num(rep.mean[k]), num(rep.standard_error[k]), num(rep.bound[k])});
        out.files.emplace_back(name() + ".csv", csv.text);
        out.summary = {{"anchor", rep.anchor},   {"slope", rep.slope},     {"slope_se", rep.slope_se},
                       {"fitted_rungs", rep.fitted_rungs}, {"bounded", rep.bounded},
                       {"realizations", rep.realizations}};
        out.verdicts.push_back(verdict("bounded", rep.bounded, 0.0, "E{K(K-1)} <= (rho_inf |D| N)^2 on every rung", false));
        out.verdicts.push_back(verdict("quadratic_slope", rep.fitted_rungs >= 2 && std::abs(rep.slope - 2.0) <= 0.3,
                                       rep.slope, "log-log slope within 0.3 of 2", false));
        return out;
    }

    static std::unique_ptr<Experiment> parse(const Json& j, const Context& ctx, const std::string& name) {
        allow_keys(j, ctx.where, {"type", "name", "anchor", "widths"});
        MinamiAccumulator acc(get_number(j, "anchor", ctx.where, 0.0),
                              ctx.positives(j, "widths", {0.4, 0.2, 0.1, 0.05, 0.025}));
        return std::make_unique<MinamiExperiment>(name, std::move(acc), ctx.disorder.density_bound(),
                                                  ctx.lattice.site_count());
    }

private:
    MinamiAccumulator acc_;
    double bound_;
    std::size_t sites_;
};

// ---------------------------------------------------------------------------

class LifshitzExperiment : public Base<LifshitzExperiment> {
public:
    LifshitzExperiment(const std::string& name, LifshitzBand band, double target)
        : Base(std::string("lifshitz"), name), band_(band), target_(target) {}

    bool needs_vectors() const override { return false; }
    void add(const Realization& r) override { ids_.add(r.eig.values); }
    void merge_from(const LifshitzExperiment& o) { ids_.merge(o.ids_); }

    ExperimentOutput finish() const override {
        ExperimentOutput out;
        IntegratedDensity ids = ids_;
        ids.finalize();
        const auto fit = lifshitz_fit(ids, band_);
        Csv csv({"log_offset", "log_log_excess"});
        for (std::size_t k = 0; k < fit.log_offset.size(); ++k) csv.line({num(fit.log_offset[k]), num(fit.log_log_excess[k])});
        out.files.emplace_back(name() + ".csv", csv.text);
        out.summary = {{"ok", fit.ok},           {"reason", fit.reason},     {"edge", fit.edge},
                       {"exponent", fit.exponent}, {"ci_low", fit.ci_low},   {"ci_high", fit.ci_high},
                       {"residual", fit.residual}, {"points", fit.points},   {"target", target_},
                       {"eigenvalues", ids.total()}};
        out.verdicts.push_back(verdict("fit_performed", fit.ok, static_cast<double>(fit.points), fit.reason, false));
        return out;
    }

    static std::unique_ptr<Experiment> parse(const Json& j, const Context& ctx, const std::string& name) {
        allow_keys(j, ctx.where, {"type", "name", "band_lower", "band_upper", "max_increment", "min_points"});
        LifshitzBand band;
        band.lower = ctx.positive(j, "band_lower", 1e-6);
        band.upper = ctx.positive(j, "band_upper", 1e-2);
        if (!(band.lower < band.upper) || band.upper >= 1.0) ctx.fail("need 0 < band_lower < band_upper < 1");
        band.max_increment = ctx.positive(j, "max_increment", 1e-4);
        const long mp = get_integer(j, "min_points", ctx.where, 5);
        if (mp < 3) ctx.fail("'min_points' must be >= 3");
        band.min_points = static_cast<int>(mp);
        return std::make_unique<LifshitzExperiment>(name, band, 0.5 * ctx.lattice.dimension);
    }

private:
    LifshitzBand band_;
    double target_;
    IntegratedDensity ids_;
};

using Parser = std::function<std::unique_ptr<Experiment>(const Json&, const Context&, const std::string&)>;

const std::map<std::string, Parser>& parsers() {
    static const std::map<std::string, Parser> table = {
        {"ccc_histogram", HistogramExperiment::parse},
        {"diagonal_scan",
         [](const Json& j, const Context& c, const std::string& n) {
             return ScanExperiment::parse(j, c, n, ScanVariant::diagonal);
         }},
        {"box_scan",
         [](const Json& j, const Context& c, const std::string& n) {
             return ScanExperiment::parse(j, c, n, ScanVariant::box);
         }},
        {"ac_conductivity", AcExperiment::parse},
        {"dc_density", DcDensityExperiment::parse},
        {"greens", GreensExperiment::parse},
        {"liouvillian", LiouvillianExperiment::parse},
        {"streda", StredaExperiment::parse},
        {"fermi_kernel", KernelExperiment::parse},
        {"linear_response", ResponseExperiment::parse},
        {"loclength", LocLengthExperiment::parse},
        {"wegner", WegnerExperiment::parse},
        {"minami", MinamiExperiment::parse},
        {"lifshitz", LifshitzExperiment::parse},
    };
    return table;
}

}  // namespace

const std::vector<std::string>& experiment_types() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [k, _] : parsers()) v.push_back(k);
        return v;
    }();
    return names;
}

std::unique_ptr<Experiment> make_experiment(const Json& block, const LatticeSpec& lattice, const DisorderSpec& disorder,
                                            const std::string& where) {
    require_object(block, where);
    const std::string type = get_string(block, "type", where);
    const auto it = parsers().find(type);
    if (it == parsers().end()) throw SchemaError(fmt::format("{}: unknown experiment type '{}'", where, type));
    const std::string name = get_string(block, "name", where, type);
    if (name.empty() || name.find_first_of("/\\.") != std::string::npos)
        throw SchemaError(fmt::format("{}: name '{}' must be a plain file stem", where, name));
    Context ctx{lattice, disorder, where};
    try {
        return it->second(block, ctx, name);
    } catch (const SchemaError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw SchemaError(fmt::format("{}: {}", where, e.what()));
    }
}

}  // namespace ccclab
