#pragma once

#include "ccclab/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccclab {

using Json = nlohmann::json;

/// Malformed or unknown configuration content.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class CachePolicy { off, read, read_write };
std::string to_string(CachePolicy p);
CachePolicy parse_cache_policy(const std::string& text);

struct RunConfig {
    LatticeSpec lattice;
    DisorderSpec disorder;
    std::size_t realizations = 1;
    std::uint64_t master_seed = 0;
    int workers = 1;
    std::size_t block_size = 16;
    SolverLimits limits;
    std::string output = "ccclab-out";
    CachePolicy cache = CachePolicy::off;
    std::string cache_dir;  ///< defaults to <output>/eigencache
    /// Validated experiment blocks, in file order.
    std::vector<Json> experiments;
    /// Source text of the config, echoed into the summary.
    Json source;
};

struct Overrides {
    std::optional<std::string> output;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
    std::optional<CachePolicy> cache;
};

/// Parses and validates everything, experiments included. Throws SchemaError.
RunConfig parse_config(const Json& doc);
RunConfig load_config(const std::string& path);
void apply_overrides(RunConfig& cfg, const Overrides& o);

// Helpers shared by the experiment parsers. `where` names the block in messages.
void require_object(const Json& j, const std::string& where);
void allow_keys(const Json& j, const std::string& where, std::initializer_list<const char*> keys);
double get_number(const Json& j, const char* key, const std::string& where, std::optional<double> fallback = {});
long get_integer(const Json& j, const char* key, const std::string& where, std::optional<long> fallback = {});
bool get_bool(const Json& j, const char* key, const std::string& where, bool fallback);
std::string get_string(const Json& j, const char* key, const std::string& where,
                       std::optional<std::string> fallback = {});
std::vector<double> get_numbers(const Json& j, const char* key, const std::string& where,
                                std::optional<std::vector<double>> fallback = {});

}  // namespace ccclab
