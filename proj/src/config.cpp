#include "ccclab/config.hpp"

#include "ccclab/experiments.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace ccclab {

std::string to_string(CachePolicy p) {
    switch (p) {
        case CachePolicy::off: return "off";
        case CachePolicy::read: return "read";
        case CachePolicy::read_write: return "read_write";
    }
    return "off";
}

CachePolicy parse_cache_policy(const std::string& text) {
    if (text == "off") return CachePolicy::off;
    if (text == "read") return CachePolicy::read;
    if (text == "read_write") return CachePolicy::read_write;
    throw SchemaError(fmt::format("cache policy must be off, read or read_write (got '{}')", text));
}

void require_object(const Json& j, const std::string& where) {
    if (!j.is_object()) throw SchemaError(fmt::format("{}: expected an object", where));
}

void allow_keys(const Json& j, const std::string& where, std::initializer_list<const char*> keys) {
    require_object(j, where);
    for (const auto& item : j.items()) {
        const bool known = std::any_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; });
        if (!known) throw SchemaError(fmt::format("{}: unknown key '{}'", where, item.key()));
    }
}

double get_number(const Json& j, const char* key, const std::string& where, std::optional<double> fallback) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw SchemaError(fmt::format("{}: missing '{}'", where, key));
    }
    const auto& v = j.at(key);
    if (!v.is_number()) throw SchemaError(fmt::format("{}.{}: expected a number", where, key));
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw SchemaError(fmt::format("{}.{}: must be finite", where, key));
    return x;
}

long get_integer(const Json& j, const char* key, const std::string& where, std::optional<long> fallback) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw SchemaError(fmt::format("{}: missing '{}'", where, key));
    }
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw SchemaError(fmt::format("{}.{}: expected an integer", where, key));
    return v.get<long>();
}

bool get_bool(const Json& j, const char* key, const std::string& where, bool fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_boolean()) throw SchemaError(fmt::format("{}.{}: expected true or false", where, key));
    return v.get<bool>();
}

std::string get_string(const Json& j, const char* key, const std::string& where, std::optional<std::string> fallback) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw SchemaError(fmt::format("{}: missing '{}'", where, key));
    }
    const auto& v = j.at(key);
    if (!v.is_string()) throw SchemaError(fmt::format("{}.{}: expected a string", where, key));
    return v.get<std::string>();
}

std::vector<double> get_numbers(const Json& j, const char* key, const std::string& where,
                                std::optional<std::vector<double>> fallback) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw SchemaError(fmt::format("{}: missing '{}'", where, key));
    }
    const auto& v = j.at(key);
    if (!v.is_array()) throw SchemaError(fmt::format("{}.{}: expected an array of numbers", where, key));
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw SchemaError(fmt::format("{}.{}: expected an array of numbers", where, key));
        out.push_back(x.get<double>());
    }
    return out;
}

namespace {

LatticeSpec parse_lattice(const Json& j) {
    const std::string where = "model.lattice";
    allow_keys(j, where, {"dimension", "sides", "boundary", "hopping", "flux"});
    LatticeSpec lat;
    lat.dimension = static_cast<int>(get_integer(j, "dimension", where));
    if (lat.dimension != 1 && lat.dimension != 2) throw SchemaError(where + ".dimension: must be 1 or 2");

    const auto sides = get_numbers(j, "sides", where);
    if (sides.size() != static_cast<std::size_t>(lat.dimension))
        throw SchemaError(fmt::format("{}.sides: expected {} entries", where, lat.dimension));
    for (std::size_t a = 0; a < sides.size(); ++a) {
        if (sides[a] != std::floor(sides[a]) || sides[a] < 1) throw SchemaError(where + ".sides: positive integers");
        lat.sides[a] = static_cast<int>(sides[a]);
    }
    if (lat.dimension == 1) lat.sides[1] = 1;

    if (j.contains("boundary")) {
        const auto& b = j.at("boundary");
        std::vector<std::string> names;
        if (b.is_string()) {
            names.assign(static_cast<std::size_t>(lat.dimension), b.get<std::string>());
        } else if (b.is_array() && b.size() == static_cast<std::size_t>(lat.dimension)) {
            for (const auto& x : b) {
                if (!x.is_string()) throw SchemaError(where + ".boundary: expected strings");
                names.push_back(x.get<std::string>());
            }
        } else {
            throw SchemaError(where + ".boundary: a string or one string per axis");
        }
        for (std::size_t a = 0; a < names.size(); ++a) {
            try {
                lat.boundary[a] = parse_boundary(names[a]);
            } catch (const std::exception& e) {
                throw SchemaError(fmt::format("{}.boundary: {}", where, e.what()));
            }
        }
    }
    lat.hopping = get_number(j, "hopping", where, 1.0);
    lat.flux = get_number(j, "flux", where, 0.0);
    if (lat.dimension == 1 && lat.flux != 0.0) throw SchemaError(where + ".flux: only meaningful in 2-d");
    try {
        lat.validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(fmt::format("{}: {}", where, e.what()));
    }
    return lat;
}

DisorderSpec parse_disorder(const Json& j) {
    const std::string where = "model.disorder";
    allow_keys(j, where, {"kind", "strength", "probability"});
    DisorderSpec d;
    try {
        d.kind = parse_disorder_kind(get_string(j, "kind", where, "none"));
    } catch (const SchemaError&) {
        throw;
    } catch (const std::exception& e) {
        throw SchemaError(fmt::format("{}.kind: {}", where, e.what()));
    }
    d.strength = get_number(j, "strength", where, 0.0);
    d.probability = get_number(j, "probability", where, 0.5);
    if (d.kind != DisorderKind::bernoulli && j.contains("probability"))
        throw SchemaError(where + ".probability: only used by bernoulli disorder");
    try {
        d.validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(fmt::format("{}: {}", where, e.what()));
    }
    return d;
}

}  // namespace

RunConfig parse_config(const Json& doc) {
    allow_keys(doc, "config", {"model", "ensemble", "solver", "output", "cache", "cache_dir", "experiments"});
    RunConfig cfg;
    cfg.source = doc;

    if (!doc.contains("model")) throw SchemaError("config: missing 'model'");
    const auto& model = doc.at("model");
    allow_keys(model, "model", {"lattice", "disorder"});
    if (!model.contains("lattice")) throw SchemaError("model: missing 'lattice'");
    cfg.lattice = parse_lattice(model.at("lattice"));
    cfg.disorder = model.contains("disorder") ? parse_disorder(model.at("disorder")) : DisorderSpec{};

    if (doc.contains("ensemble")) {
        const auto& e = doc.at("ensemble");
        allow_keys(e, "ensemble", {"realizations", "master_seed", "workers", "block_size"});
        const long n = get_integer(e, "realizations", "ensemble", 1);
        if (n < 1) throw SchemaError("ensemble.realizations: must be >= 1");
        cfg.realizations = static_cast<std::size_t>(n);
        if (e.contains("master_seed")) {
            const auto& s = e.at("master_seed");
            if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
                throw SchemaError("ensemble.master_seed: expected a non-negative integer");
            cfg.master_seed = s.get<std::uint64_t>();
        }
        const long w = get_integer(e, "workers", "ensemble", 1);
        if (w < 1) throw SchemaError("ensemble.workers: must be >= 1");
        cfg.workers = static_cast<int>(w);
        const long b = get_integer(e, "block_size", "ensemble", 16);
        if (b < 1) throw SchemaError("ensemble.block_size: must be >= 1");
        cfg.block_size = static_cast<std::size_t>(b);
    }
    if (doc.contains("solver")) {
        const auto& s = doc.at("solver");
        allow_keys(s, "solver", {"max_dimension"});
        const long m = get_integer(s, "max_dimension", "solver", 4096);
        if (m < 1) throw SchemaError("solver.max_dimension: must be >= 1");
        cfg.limits.max_dimension = static_cast<std::size_t>(m);
    }
    cfg.output = get_string(doc, "output", "config", cfg.output);
    cfg.cache = parse_cache_policy(get_string(doc, "cache", "config", "off"));
    cfg.cache_dir = get_string(doc, "cache_dir", "config", "");

    if (doc.contains("experiments")) {
        const auto& list = doc.at("experiments");
        if (!list.is_array()) throw SchemaError("experiments: expected an array");
        std::set<std::string> names;
        for (std::size_t k = 0; k < list.size(); ++k) {
            // constructing validates every parameter
            const auto exp = make_experiment(list[k], cfg.lattice, cfg.disorder, fmt::format("experiments[{}]", k));
            if (!names.insert(exp->name()).second)
                throw SchemaError(fmt::format("experiments[{}]: duplicate name '{}'", k, exp->name()));
            cfg.experiments.push_back(list[k]);
        }
    }

    if (cfg.lattice.site_count() > cfg.limits.max_dimension)
        throw CapacityError(fmt::format("{} sites exceed the dense-solver cap of {}", cfg.lattice.site_count(),
                                        cfg.limits.max_dimension));
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError(fmt::format("cannot read config '{}'", path));
    Json doc;
    try {
        doc = Json::parse(in, nullptr, true, true);
    } catch (const Json::parse_error& e) {
        throw SchemaError(fmt::format("{}: {}", path, e.what()));
    }
    return parse_config(doc);
}

void apply_overrides(RunConfig& cfg, const Overrides& o) {
    if (o.output) cfg.output = *o.output;
    if (o.workers) {
        if (*o.workers < 1) throw SchemaError("--workers must be >= 1");
        cfg.workers = *o.workers;
    }
    if (o.seed) cfg.master_seed = *o.seed;
    if (o.cache) cfg.cache = *o.cache;
}

}  // namespace ccclab
