#include "ccclab/runner.hpp"

#include "ccclab/cache.hpp"
#include "ccclab/ccc.hpp"
#include "ccclab/ensemble.hpp"
#include "ccclab/localization.hpp"
#include "ccclab/transport.hpp"

#include <fmt/format.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <random>

namespace ccclab {

namespace fs = std::filesystem;

int exit_code_for(std::exception_ptr error) {
    while (error) {
        try {
            std::rethrow_exception(error);
        } catch (const SchemaError&) {
            return exit_schema;
        } catch (const CapacityError&) {
            return exit_resource;
        } catch (const CacheError&) {
            return exit_resource;
        } catch (const InvariantViolation&) {
            return exit_invariant;
        } catch (const NestedError& e) {
            if (!e.cause) return exit_failure;
            error = e.cause;
        } catch (...) {
            return exit_failure;
        }
    }
    return exit_failure;
}

std::string describe_error(std::exception_ptr error) {
    // context is already folded into each wrapper's message
    try {
        std::rethrow_exception(error);
    } catch (const std::exception& e) {
        return e.what();
    } catch (...) {
        return "unknown error";
    }
}

namespace {

class Logger {
public:
    explicit Logger(std::ostream& out) : out_(out) {}
    void event(const std::string& name, Json fields = Json::object()) {
        fields["event"] = name;
        std::lock_guard lock(mutex_);
        out_ << fields.dump() << '\n' << std::flush;
    }

private:
    std::ostream& out_;
    std::mutex mutex_;
};

struct Counters {
    std::atomic<std::size_t> diagonalizations{0};
    std::atomic<std::size_t> hits{0};
};

using Source = std::function<Realization(const LatticeSpec&, const DisorderSpec&)>;

fs::path cache_root(const RunConfig& cfg) {
    return cfg.cache_dir.empty() ? fs::path(cfg.output) / "eigencache" : fs::path(cfg.cache_dir);
}

Source make_source(const RunConfig& cfg, SolveMode mode, Counters& counters) {
    std::shared_ptr<EigenCache> cache;
    if (cfg.cache != CachePolicy::off) cache = std::make_shared<EigenCache>(cache_root(cfg));
    const bool write = cfg.cache == CachePolicy::read_write;
    const SolverLimits limits = cfg.limits;
    return [cache, write, limits, mode, &counters](const LatticeSpec& lat, const DisorderSpec& dis) {
        if (cache) {
            if (auto es = cache->load(lat, dis, mode)) {
                ++counters.hits;
                return Realization::assemble(lat, dis, build_hamiltonian(lat, dis, limits), std::move(*es));
            }
        }
        Realization r = Realization::build(lat, dis, limits, mode);
        ++counters.diagonalizations;
        if (write) cache->store(lat, dis, r.eig);
        return r;
    };
}

EnsembleConfig ensemble_config(const RunConfig& cfg) {
    EnsembleConfig ec;
    ec.lattice = cfg.lattice;
    ec.disorder = cfg.disorder;
    ec.realizations = cfg.realizations;
    ec.master_seed = cfg.master_seed;
    ec.workers = cfg.workers;
    ec.block_size = cfg.block_size;
    ec.limits = cfg.limits;
    return ec;
}

Json verdict_json(const Verdict& v) {
    return {{"experiment", v.experiment}, {"name", v.name},   {"passed", v.passed},
            {"hard", v.hard},             {"value", v.value}, {"detail", v.detail}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    out << text;
    if (!out) throw std::runtime_error(fmt::format("short write on {}", path.string()));
}

double hermiticity_tolerance(const Realization& r) {
    return 1e-12 * std::max(1.0, r.eig.operator_norm);
}

void check_hermitian(const Realization& r) {
    const double defect = hermiticity_defect(r.hamiltonian);
    if (defect > hermiticity_tolerance(r))
        throw InvariantViolation(fmt::format("hamiltonian is not hermitian (defect {:.3g})", defect));
}

struct Bundle {
    std::vector<std::unique_ptr<Experiment>> experiments;
    double hermiticity = 0.0;
    std::size_t count = 0;

    void merge(const Bundle& other) {
        for (std::size_t k = 0; k < experiments.size(); ++k) experiments[k]->merge(*other.experiments[k]);
        hermiticity = std::max(hermiticity, other.hermiticity);
        count += other.count;
    }
};

Verdict core_verdict(std::string name, bool passed, double value, std::string detail) {
    return Verdict{"core", std::move(name), passed, true, value, std::move(detail)};
}

bool hard_verdicts_pass(const std::vector<Verdict>& verdicts) {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed || !v.hard; });
}

Json seeds_json(const RunConfig& cfg) {
    Json seeds = Json::array();
    for (std::size_t k = 0; k < cfg.realizations; ++k)
        seeds.push_back({{"realization", k}, {"seed", realization_seed(cfg.master_seed, k)}});
    return seeds;
}

Json run_header(const RunConfig& cfg) {
    return {{"config", cfg.source},
            {"effective",
             {{"output", cfg.output},
              {"workers", cfg.workers},
              {"master_seed", cfg.master_seed},
              {"realizations", cfg.realizations},
              {"block_size", cfg.block_size},
              {"cache", to_string(cfg.cache)},
              {"lattice", cfg.lattice.describe()},
              {"disorder", cfg.disorder.describe()}}},
            {"versions",
             {{"ccclab", version},
              {"cache_format", EigenCache::format_version},
              {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)}}},
            {"seeds", seeds_json(cfg)}};
}

}  // namespace

RunReport run_experiments(const RunConfig& cfg, std::ostream& log_stream) {
    Logger log(log_stream);
    std::vector<std::unique_ptr<Experiment>> prototypes;
    for (std::size_t k = 0; k < cfg.experiments.size(); ++k)
        prototypes.push_back(make_experiment(cfg.experiments[k], cfg.lattice, cfg.disorder, fmt::format("experiments[{}]", k)));
    const bool vectors = std::any_of(prototypes.begin(), prototypes.end(), [](const auto& e) { return e->needs_vectors(); });

    fs::create_directories(cfg.output);
    Counters counters;
    EnsembleConfig ec = ensemble_config(cfg);
    ec.mode = vectors ? SolveMode::values_and_vectors : SolveMode::values_only;
    ec.source = make_source(cfg, ec.mode, counters);
    log.event("start", {{"realizations", cfg.realizations},
                        {"workers", cfg.workers},
                        {"experiments", prototypes.size()},
                        {"sites", cfg.lattice.site_count()},
                        {"vectors", vectors}});

    auto make = [&] {
        Bundle b;
        for (const auto& p : prototypes) b.experiments.push_back(p->fresh());
        return b;
    };
    std::atomic<std::size_t> done{0};
    auto visit = [&](Bundle& b, const Realization& r) {
        check_hermitian(r);
        b.hermiticity = std::max(b.hermiticity, hermiticity_defect(r.hamiltonian));
        ++b.count;
        for (auto& e : b.experiments) {
            try {
                e->add(r);
            } catch (const std::exception& err) {
                throw NestedError(fmt::format("experiment '{}': {}", e->name(), err.what()), std::current_exception());
            }
        }
        const std::size_t n = ++done;
        if (n % 50 == 0 || n == cfg.realizations) log.event("progress", {{"realizations_done", n}});
    };
    Bundle total = run_ensemble<Bundle>(ec, make, visit);

    RunReport report;
    // eigensolver sanity on the first realization, through the same source
    EnsembleConfig first = ec;
    first.mode = SolveMode::values_and_vectors;
    first.source = make_source(cfg, SolveMode::values_and_vectors, counters);
    const Realization r0 = make_realization(first, 0);
    const EigenCheck check = check_eigensystem(r0.hamiltonian, r0.eig);
    report.verdicts.push_back(core_verdict("eigensystem", check.ok(), std::max(check.residual, check.orthogonality),
                                           "residual and orthogonality of realization 0 <= 1e-10"));
    report.verdicts.push_back(core_verdict("hermiticity", true, total.hermiticity,
                                           fmt::format("max |H - H^dag| over {} realizations", total.count)));

    Json experiments = Json::object();
    for (const auto& e : total.experiments) {
        ExperimentOutput out = e->finish();
        for (const auto& [file, text] : out.files) write_text(fs::path(cfg.output) / file, text);
        if (out.verdicts.empty())
            out.verdicts.push_back(Verdict{e->name(), "verdicts_present", false, true, 0.0, "experiment reported no verdicts"});
        out.summary["type"] = e->type();
        Json files = Json::array();
        for (const auto& f : out.files) files.push_back(f.first);
        out.summary["files"] = files;
        experiments[e->name()] = out.summary;
        for (auto& v : out.verdicts) report.verdicts.push_back(std::move(v));
        log.event("experiment_done", {{"experiment", e->name()}, {"type", e->type()}});
    }

    report.all_hard_passed = hard_verdicts_pass(report.verdicts);
    report.diagonalizations = counters.diagonalizations;
    report.cache_hits = counters.hits;
    Json verdicts = Json::array();
    for (const auto& v : report.verdicts) verdicts.push_back(verdict_json(v));
    report.summary = run_header(cfg);
    report.summary["experiments"] = experiments;
    report.summary["verdicts"] = verdicts;
    report.summary["all_hard_passed"] = report.all_hard_passed;
    report.summary["diagnostics"] = {{"diagonalizations", report.diagonalizations}, {"cache_hits", report.cache_hits}};
    write_text(fs::path(cfg.output) / "summary.json", report.summary.dump(2) + "\n");
    log.event("done", {{"all_hard_passed", report.all_hard_passed},
                       {"diagonalizations", report.diagonalizations},
                       {"cache_hits", report.cache_hits}});
    return report;
}

namespace {

struct Tally {
    double worst = 0.0;
    double tolerance = 0.0;
    std::size_t checks = 0;
    std::string skipped;
    std::string detail;
};

class IdentitySuite {
public:
    void define(const std::string& name, double tol, std::string detail) {
        auto& t = tallies_[name];
        t.tolerance = tol;
        t.detail = std::move(detail);
        order_.push_back(name);
    }
    void record(const std::string& name, double residual) {
        auto& t = tallies_.at(name);
        t.worst = std::max(t.worst, std::isfinite(residual) ? residual : std::numeric_limits<double>::infinity());
        ++t.checks;
    }
    void skip(const std::string& name, std::string why) { tallies_.at(name).skipped = std::move(why); }

    std::vector<Verdict> verdicts() const {
        std::vector<Verdict> out;
        for (const auto& name : order_) {
            const auto& t = tallies_.at(name);
            if (t.checks == 0 && !t.skipped.empty())
                out.push_back(Verdict{"verify", name, true, true, 0.0, "skipped: " + t.skipped});
            else
                out.push_back(Verdict{"verify", name, t.checks > 0 && t.worst <= t.tolerance, true, t.worst,
                                      fmt::format("{} ({} checks, tolerance {:g})", t.detail, t.checks, t.tolerance)});
        }
        return out;
    }

private:
    std::map<std::string, Tally> tallies_;
    std::vector<std::string> order_;
};

double relative(double a, double b, double scale) { return std::abs(a - b) / std::max(1.0, std::abs(scale)); }

void verify_realization(const Realization& r, std::uint64_t seed, IdentitySuite& suite) {
    std::mt19937_64 rng(seed ^ 0x5bd1e9955bd1e995ULL);
    const auto& ev = r.eig.values;
    double lo = ev.minCoeff(), hi = ev.maxCoeff();
    if (hi - lo < 1e-9) {
        lo -= 1.0;
        hi += 1.0;
    }
    std::uniform_real_distribution<double> energy(lo, hi);
    std::uniform_real_distribution<double> width(0.05 * (hi - lo), 0.5 * (hi - lo));
    const auto& lat = r.lattice;
    const int d = lat.dimension;

    suite.record("hermiticity", hermiticity_defect(r.hamiltonian) / std::max(1.0, r.eig.operator_norm));
    const auto check = check_eigensystem(r.hamiltonian, r.eig);
    suite.record("eigensystem", std::max(check.residual, check.orthogonality) + (check.ascending ? 0.0 : 1.0));

    for (int a = 0; a < d; ++a) {
        if (lat.periodic(a)) continue;
        const Operator x = position_operator(lat, a);
        const Operator comm = Complex(0.0, 1.0) * (r.hamiltonian * x - x * r.hamiltonian);
        suite.record("commutator",
                     (r.velocity(a) - comm).cwiseAbs().maxCoeff() / std::max(1.0, r.eig.operator_norm));

        const double e = energy(rng), eps = width(rng);
        const auto dc = decomposition_check(r, e, eps, a);
        suite.record("decomposition", dc.residual / std::max(1.0, std::abs(dc.measure)));
    }

    if (lat.all_open()) {
        const double e = energy(rng), eps = width(rng);
        const auto window = EnergyInterval::half_open(e, e + eps);
        for (int a = 0; a < d; ++a) {
            const auto s = loc_length_spectral(r, window, a);
            const double m = loc_length_moment(r, window, a);
            suite.record("loc_routes", relative(s.ell2 + s.excluded, m, m));
        }
        const double ef = energy(rng);
        for (const double eta : {0.5, 0.1, 0.02})
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) {
                    const double g = greens_conductivity(r, ef, eta, a, b);
                    const double l = greens_lorentzian_ratio(d) * lorentzian_ccc(r, ef, eta, a, b);
                    suite.record("greens_lorentzian", relative(g, l, g));
                }
    }

    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
            const double e1 = energy(rng), e2 = energy(rng);
            const auto d1 = EnergyInterval::half_open(e1, e1 + width(rng));
            const auto d2 = EnergyInterval::half_open(e2, e2 + width(rng));
            const Complex eig_sum = window_measure_complex(r, d1, d2, a, b);
            const Complex trace = window_measure_trace(r, d1, d2, a, b);
            suite.record("ccc_dual_route", std::abs(eig_sum - trace) / std::max(1.0, std::abs(trace)));
        }
        const auto rule = sum_rule(r, a);
        suite.record("sum_rule", relative(rule.mass, rule.trace, rule.trace));
    }
}

}  // namespace

RunReport verify_identities(const RunConfig& cfg, std::ostream& log_stream) {
    Logger log(log_stream);
    fs::create_directories(cfg.output);
    Counters counters;
    EnsembleConfig ec = ensemble_config(cfg);
    ec.workers = 1;
    ec.source = make_source(cfg, SolveMode::values_and_vectors, counters);
    ec.validate();

    IdentitySuite suite;
    suite.define("hermiticity", 1e-12, "max |H - H^dag| / max(1, ||H||)");
    suite.define("eigensystem", 1e-10, "eigen residual and orthogonality");
    suite.define("commutator", 1e-12, "velocity against i[H, x]");
    suite.define("decomposition", 1e-9, "four-term expansion of M(I, I)");
    suite.define("loc_routes", 1e-9, "spectral (plus degenerate pairs) against moment route");
    suite.define("greens_lorentzian", 1e-9, "resolvent route against Lorentzian-smeared ccc at eta 0.5, 0.1, 0.02");
    suite.define("ccc_dual_route", 1e-10, "eigen-sum against projector trace");
    suite.define("sum_rule", 1e-10, "total ccc mass against (1/N) Tr v^2");

    bool any_open = false;
    for (int a = 0; a < cfg.lattice.dimension; ++a) any_open = any_open || !cfg.lattice.periodic(a);
    if (!any_open) {
        suite.skip("commutator", "no open axis");
        suite.skip("decomposition", "no open axis");
    }
    if (!cfg.lattice.all_open()) {
        suite.skip("loc_routes", "periodic axis");
        suite.skip("greens_lorentzian", "periodic axis");
    }

    log.event("verify_start", {{"realizations", cfg.realizations}, {"sites", cfg.lattice.site_count()}});
    for (std::size_t k = 0; k < cfg.realizations; ++k) {
        const auto index = static_cast<std::uint64_t>(k);
        const std::uint64_t seed = realization_seed(cfg.master_seed, index);
        try {
            const Realization r = make_realization(ec, index);
            verify_realization(r, seed, suite);
        } catch (const std::exception& e) {
            throw EnsembleError(index, seed, e.what(), std::current_exception());
        }
        log.event("verified", {{"realization", k}, {"seed", seed}});
    }

    RunReport report;
    report.verdicts = suite.verdicts();
    report.all_hard_passed = hard_verdicts_pass(report.verdicts);
    report.diagonalizations = counters.diagonalizations;
    report.cache_hits = counters.hits;
    Json verdicts = Json::array();
    for (const auto& v : report.verdicts) verdicts.push_back(verdict_json(v));
    report.summary = run_header(cfg);
    report.summary["verdicts"] = verdicts;
    report.summary["all_hard_passed"] = report.all_hard_passed;
    report.summary["diagnostics"] = {{"diagonalizations", report.diagonalizations}, {"cache_hits", report.cache_hits}};
    write_text(fs::path(cfg.output) / "verify.json", report.summary.dump(2) + "\n");
    log.event("verify_done", {{"all_hard_passed", report.all_hard_passed}});
    return report;
}

namespace {

template <class Body>
int guarded(std::ostream& out, std::ostream& log, Body body) {
    try {
        return body();
    } catch (...) {
        const auto error = std::current_exception();
        const int code = exit_code_for(error);
        const std::string message = describe_error(error);
        Json line = {{"event", "error"}, {"exit_code", code}, {"message", message}};
        log << line.dump() << '\n';
        out << "error: " << message << '\n';
        return code;
    }
}

RunConfig prepare(const std::string& path, const Overrides& overrides) {
    RunConfig cfg = load_config(path);
    apply_overrides(cfg, overrides);
    return cfg;
}

}  // namespace

int run_command(const std::string& config_path, const Overrides& overrides, std::ostream& out, std::ostream& log) {
    return guarded(out, log, [&] {
        const RunConfig cfg = prepare(config_path, overrides);
        const RunReport report = run_experiments(cfg, log);
        for (const auto& v : report.verdicts)
            out << fmt::format("{} {}/{} value={} {}\n", v.passed ? "PASS" : (v.hard ? "FAIL" : "WARN"), v.experiment,
                               v.name, format_number(v.value), v.detail);
        out << fmt::format("diagonalizations={} cache_hits={}\n", report.diagonalizations, report.cache_hits);
        return report.all_hard_passed ? int(exit_ok) : int(exit_invariant);
    });
}

int verify_command(const std::string& config_path, const Overrides& overrides, std::ostream& out, std::ostream& log) {
    return guarded(out, log, [&] {
        const RunConfig cfg = prepare(config_path, overrides);
        const RunReport report = verify_identities(cfg, log);
        for (const auto& v : report.verdicts)
            out << fmt::format("{} {} max_residual={} {}\n", v.passed ? "PASS" : "FAIL", v.name, format_number(v.value),
                               v.detail);
        return report.all_hard_passed ? int(exit_ok) : int(exit_invariant);
    });
}

}  // namespace ccclab
