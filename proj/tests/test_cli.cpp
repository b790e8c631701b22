#include "support.hpp"

#include "ccclab/cache.hpp"
#include "ccclab/config.hpp"
#include "ccclab/ensemble.hpp"
#include "ccclab/experiments.hpp"
#include "ccclab/runner.hpp"

#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ccclab;
namespace fs = std::filesystem;

namespace {

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& tag) {
        dir = fs::temp_directory_path() / ("ccclab-test-" + tag);
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(dir / name) << text;
        return (dir / name).string();
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* two_site_config = R"({
  "model": {"lattice": {"dimension": 1, "sides": [2]}, "disorder": {"kind": "none"}},
  "ensemble": {"realizations": 1},
  "experiments": [{"type": "ccc_histogram", "name": "ccc", "bins": 8}]
})";

const char* chain_config = R"({
  // a small localized chain
  "model": {"lattice": {"dimension": 1, "sides": [48]}, "disorder": {"kind": "uniform", "strength": 3.0}},
  "ensemble": {"realizations": 37, "master_seed": 5},
  "experiments": [
    {"type": "diagonal_scan", "name": "diag", "rungs": 5},
    {"type": "ccc_histogram", "name": "hist", "bins": 32},
    {"type": "ac_conductivity", "name": "ac", "nu": [0.0, 0.5], "temperature": 0.1},
    {"type": "loclength", "name": "loc", "windows": [[-1.0, 0.0], [0.0, 1.0]]},
    {"type": "minami", "name": "minami"}
  ]
})";

int run_quiet(const std::string& path, Overrides o) {
    std::ostringstream out, log;
    return run_command(path, o, out, log);
}

}  // namespace

TEST_CASE("minimal run writes the two-site histogram") {
    Scratch s("minimal");
    const auto path = s.write("c.json", two_site_config);
    Overrides o;
    o.output = (s.dir / "out").string();
    REQUIRE(run_quiet(path, o) == exit_ok);

    std::istringstream csv(slurp(s.dir / "out" / "ccc.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "bin_lo_1,bin_lo_2,mean,variance,count,imag_mean");
    int rows = 0;
    while (std::getline(csv, line)) {
        double lo1, lo2, mean;
        CHECK(std::sscanf(line.c_str(), "%lf,%lf,%lf", &lo1, &lo2, &mean) == 3);
        CHECK(lo1 != lo2);
        CHECK(mean == doctest::Approx(0.5).epsilon(1e-14));
        ++rows;
    }
    CHECK(rows == 2);

    const auto summary = Json::parse(slurp(s.dir / "out" / "summary.json"));
    CHECK(summary.at("all_hard_passed").get<bool>());
    CHECK(summary.at("verdicts").size() >= 4);
    CHECK(summary.at("seeds").size() == 1);
}

TEST_CASE("unknown keys are schema errors before any work") {
    Scratch s("schema");
    Overrides o;
    o.output = (s.dir / "out").string();
    CHECK(run_quiet(s.write("a.json", R"({"model": {"lattice": {"dimension": 1, "sides": [4]}}, "typo": 1})"), o) ==
          exit_schema);
    CHECK(run_quiet(s.write("b.json", R"({"model": {"lattice": {"dimension": 1, "sides": [4], "hoping": 1}}})"), o) ==
          exit_schema);
    CHECK(run_quiet(s.write("c.json", R"({"model": {"lattice": {"dimension": 1, "sides": [4]}},
        "experiments": [{"type": "ccc_histogram", "bogus": 2}]})"), o) == exit_schema);
    CHECK(run_quiet(s.write("d.json", R"({"model": {"lattice": {"dimension": 1, "sides": [4]}},
        "experiments": [{"type": "nope"}]})"), o) == exit_schema);
    CHECK(run_quiet(s.write("e.json", "{ not json"), o) == exit_schema);
    CHECK_FALSE(fs::exists(s.dir / "out"));
}

TEST_CASE("experiment preconditions are checked at parse time") {
    const auto chain = LatticeSpec::chain(8);
    const auto ring = LatticeSpec::chain(8, Boundary::periodic);
    const DisorderSpec none;
    CHECK_THROWS_AS(make_experiment(Json::parse(R"({"type": "streda"})"), chain, none, "x"), SchemaError);
    CHECK_THROWS_AS(make_experiment(Json::parse(R"({"type": "loclength"})"), ring, none, "x"), SchemaError);
    CHECK_THROWS_AS(make_experiment(Json::parse(R"({"type": "greens"})"), ring, none, "x"), SchemaError);
    CHECK_THROWS_AS(make_experiment(Json::parse(R"({"type": "ac_conductivity", "alpha": 2})"), chain, none, "x"),
                    SchemaError);
    CHECK_THROWS_AS(make_experiment(Json::parse(R"({"type": "diagonal_scan", "rungs": 0})"), chain, none, "x"),
                    SchemaError);
    CHECK_THROWS_AS(make_experiment(Json::parse(R"({"type": "box_scan", "centered": true})"), chain, none, "x"),
                    SchemaError);
    CHECK_THROWS_AS(make_experiment(Json::parse(R"({"type": "wegner", "name": "../w"})"), chain, none, "x"),
                    SchemaError);
    for (const auto& type : experiment_types()) {
        const auto lat = type == "streda" ? LatticeSpec::square(4, 4) : chain;
        CHECK_NOTHROW(make_experiment(Json{{"type", type}}, lat, DisorderSpec::uniform(1.0), "x"));
    }
}

TEST_CASE("duplicate experiment names are rejected") {
    const auto doc = Json::parse(R"({"model": {"lattice": {"dimension": 1, "sides": [4]}},
        "experiments": [{"type": "minami"}, {"type": "minami"}]})");
    CHECK_THROWS_AS(parse_config(doc), SchemaError);
}

TEST_CASE("overrides") {
    auto cfg = parse_config(Json::parse(R"({"model": {"lattice": {"dimension": 1, "sides": [4]}}})"));
    Overrides o;
    o.workers = 3;
    o.seed = 99;
    o.cache = CachePolicy::read;
    o.output = "elsewhere";
    apply_overrides(cfg, o);
    CHECK(cfg.workers == 3);
    CHECK(cfg.master_seed == 99);
    CHECK(cfg.cache == CachePolicy::read);
    CHECK(cfg.output == "elsewhere");
    o.workers = 0;
    CHECK_THROWS_AS(apply_overrides(cfg, o), SchemaError);
}

TEST_CASE("capacity errors exit with 3") {
    Scratch s("capacity");
    const auto path = s.write("c.json", R"({"model": {"lattice": {"dimension": 1, "sides": [40]}},
        "solver": {"max_dimension": 16}, "experiments": [{"type": "minami"}]})");
    Overrides o;
    o.output = (s.dir / "out").string();
    CHECK(run_quiet(path, o) == exit_resource);
}

TEST_CASE("exit codes follow the root cause") {
    auto wrap = [](auto inner) {
        try {
            throw inner;
        } catch (...) {
            return std::make_exception_ptr(EnsembleError(3, 7, "x", std::current_exception()));
        }
    };
    CHECK(exit_code_for(wrap(InvariantViolation("x"))) == exit_invariant);
    CHECK(exit_code_for(wrap(CacheError("x"))) == exit_resource);
    CHECK(exit_code_for(wrap(std::runtime_error("x"))) == exit_failure);
    CHECK(exit_code_for(std::make_exception_ptr(SchemaError("x"))) == exit_schema);
}

TEST_CASE("cache round trip, reuse and corruption") {
    Scratch s("cache");
    const auto path = s.write("c.json", chain_config);
    Overrides o;
    o.output = (s.dir / "out").string();
    o.cache = CachePolicy::read_write;

    auto cfg = load_config(path);
    apply_overrides(cfg, o);
    std::ostringstream log;
    const auto first = run_experiments(cfg, log);
    CHECK(first.diagonalizations > 0);
    const auto hist = slurp(s.dir / "out" / "hist.csv");

    const auto second = run_experiments(cfg, log);
    CHECK(second.diagonalizations == 0);
    CHECK(second.cache_hits == first.diagonalizations + first.cache_hits);
    CHECK(slurp(s.dir / "out" / "hist.csv") == hist);
    CHECK(log.str().find(R"("diagonalizations":0)") != std::string::npos);

    // flip one byte of one cached eigenvector file
    fs::path victim;
    for (const auto& e : fs::recursive_directory_iterator(s.dir / "out" / "eigencache"))
        if (e.path().filename() == "vectors_re.f64") victim = e.path();
    REQUIRE_FALSE(victim.empty());
    {
        std::fstream f(victim, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(17);
        f.put('\x5a');
    }
    std::ostringstream out, vlog;
    o.cache = CachePolicy::read;
    CHECK(verify_command(path, o, out, vlog) == exit_resource);
    CHECK(out.str().find("checksum") != std::string::npos);
}

TEST_CASE("cache format mismatch is a miss") {
    Scratch s("cache-version");
    const EigenCache cache(s.dir);
    const auto lat = LatticeSpec::chain(6);
    const auto dis = DisorderSpec::uniform(1.0, 3, 1);
    const auto r = Realization::build(lat, dis);
    cache.store(lat, dis, r.eig);
    const auto hit = cache.load(lat, dis, SolveMode::values_and_vectors);
    REQUIRE(hit.has_value());
    CHECK((hit->values - r.eig.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK((hit->vectors - r.eig.vectors).cwiseAbs().maxCoeff() == 0.0);
    CHECK_FALSE(cache.load(lat, DisorderSpec::uniform(1.0, 3, 2), SolveMode::values_only).has_value());

    const auto manifest = cache.entry(lat, dis) / "manifest.json";
    auto j = Json::parse(slurp(manifest));
    j["format_version"] = 999;
    std::ofstream(manifest) << j.dump();
    CHECK_FALSE(cache.load(lat, dis, SolveMode::values_only).has_value());
}

TEST_CASE("identical config gives identical CSVs for 1 and 8 workers") {
    Scratch s("determinism");
    const auto path = s.write("c.json", chain_config);
    for (const int w : {1, 8}) {
        Overrides o;
        o.workers = w;
        o.output = (s.dir / fmt::format("w{}", w)).string();
        REQUIRE(run_quiet(path, o) == exit_ok);
    }
    int files = 0;
    for (const auto& e : fs::directory_iterator(s.dir / "w1")) {
        if (e.path().extension() != ".csv") continue;
        CHECK(slurp(e.path()) == slurp(s.dir / "w8" / e.path().filename()));
        ++files;
    }
    CHECK(files >= 5);
}

TEST_CASE("verify passes on a disordered chain and on a hopping-free model") {
    Scratch s("verify");
    Overrides o;
    o.output = (s.dir / "out").string();
    std::ostringstream out, log;
    const auto a = s.write("a.json", R"({"model": {"lattice": {"dimension": 1, "sides": [64]},
        "disorder": {"kind": "uniform", "strength": 2.0}}, "ensemble": {"realizations": 5, "master_seed": 9}})");
    CHECK(verify_command(a, o, out, log) == exit_ok);
    const auto b = s.write("b.json", R"({"model": {"lattice": {"dimension": 2, "sides": [4, 4], "hopping": 0.0}},
        "ensemble": {"realizations": 2}})");
    CHECK(verify_command(b, o, out, log) == exit_ok);
    const auto c = s.write("c.json", R"({"model": {"lattice": {"dimension": 2, "sides": [6, 6], "boundary": "periodic"},
        "disorder": {"kind": "bernoulli", "strength": 1.0, "probability": 0.3}}, "ensemble": {"realizations": 2}})");
    CHECK(verify_command(c, o, out, log) == exit_ok);
    CHECK(out.str().find("FAIL") == std::string::npos);
    const auto report = Json::parse(slurp(s.dir / "out" / "verify.json"));
    CHECK(report.at("verdicts").size() == 8);
}

TEST_CASE("shipped configs parse") {
    std::size_t seen = 0;
    for (const auto& entry : fs::directory_iterator(CCCLAB_CONFIG_DIR)) {
        if (entry.path().extension() != ".json") continue;
        CAPTURE(entry.path().string());
        CHECK_NOTHROW(load_config(entry.path().string()));
        ++seen;
    }
    CHECK(seen >= 5);
}
