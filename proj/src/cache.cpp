#include "ccclab/cache.hpp"

#include "ccclab/hash.hpp"

#include <fmt/format.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

namespace ccclab {

namespace fs = std::filesystem;

namespace {

std::vector<std::byte> to_bytes(const std::vector<double>& v) {
    std::vector<std::byte> out(v.size() * sizeof(double));
    std::memcpy(out.data(), v.data(), out.size());
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t k = 0; k < out.size(); k += 8) std::reverse(out.begin() + k, out.begin() + k + 8);
    return out;
}

std::vector<double> from_bytes(const std::vector<std::byte>& b) {
    std::vector<std::byte> copy = b;
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t k = 0; k < copy.size(); k += 8) std::reverse(copy.begin() + k, copy.begin() + k + 8);
    std::vector<double> out(copy.size() / sizeof(double));
    std::memcpy(out.data(), copy.data(), out.size() * sizeof(double));
    return out;
}

void write_file(const fs::path& path, const std::vector<std::byte>& data) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw CacheError(fmt::format("cannot write cache file {}", tmp.string()));
        out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
        if (!out) throw CacheError(fmt::format("short write on {}", tmp.string()));
    }
    fs::rename(tmp, path);
}

std::vector<std::byte> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CacheError(fmt::format("cache file {} is missing", path.string()));
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::byte> out(raw.size());
    std::memcpy(out.data(), raw.data(), raw.size());
    return out;
}

}  // namespace

EigenCache::EigenCache(fs::path root) : root_(std::move(root)) {}

Json EigenCache::identity(const LatticeSpec& lattice, const DisorderSpec& disorder) {
    Json lat = {{"dimension", lattice.dimension},
                {"sides", {lattice.sides[0], lattice.sides[1]}},
                {"boundary", {to_string(lattice.boundary[0]), to_string(lattice.boundary[1])}},
                {"hopping", lattice.hopping},
                {"flux", lattice.flux}};
    Json dis = {{"kind", to_string(disorder.kind)},
                {"strength", disorder.strength},
                {"probability", disorder.probability}};
    return {{"lattice", lat},
            {"disorder", dis},
            {"master_seed", disorder.master_seed},
            {"realization", disorder.realization}};
}

fs::path EigenCache::entry(const LatticeSpec& lattice, const DisorderSpec& disorder) const {
    const std::string text = identity(lattice, disorder).dump();
    const auto digest = sha256_hex(std::as_bytes(std::span(text.data(), text.size())));
    return root_ / digest.substr(0, 24);
}

std::optional<EigenSystem> EigenCache::load(const LatticeSpec& lattice, const DisorderSpec& disorder,
                                            SolveMode mode) const {
    const fs::path dir = entry(lattice, disorder);
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) return std::nullopt;

    Json manifest;
    try {
        std::ifstream in(manifest_path);
        manifest = Json::parse(in);
    } catch (const std::exception& e) {
        throw CacheError(fmt::format("unreadable cache manifest {}: {}", manifest_path.string(), e.what()));
    }
    if (!manifest.is_object() || manifest.value("format_version", -1) != format_version) return std::nullopt;
    if (manifest.value("identity", Json()) != identity(lattice, disorder)) return std::nullopt;
    const bool has_vectors = manifest.value("has_vectors", false);
    if (mode == SolveMode::values_and_vectors && !has_vectors) return std::nullopt;

    auto checked = [&](const char* name) {
        const auto& info = manifest.at("files").at(name);
        const fs::path path = dir / info.at("file").get<std::string>();
        const auto bytes = read_file(path);
        if (sha256_hex(bytes) != info.at("sha256").get<std::string>())
            throw CacheError(fmt::format("checksum mismatch in cache file {}", path.string()));
        return from_bytes(bytes);
    };

    try {
        const auto n = manifest.at("size").get<Eigen::Index>();
        EigenSystem es;
        const auto values = checked("eigenvalues");
        if (static_cast<Eigen::Index>(values.size()) != n)
            throw CacheError(fmt::format("cache entry {} has a wrong eigenvalue count", dir.string()));
        es.values = Eigen::Map<const Eigen::VectorXd>(values.data(), n);
        if (mode == SolveMode::values_and_vectors) {
            const auto re = checked("vectors_re");
            const auto im = checked("vectors_im");
            if (static_cast<Eigen::Index>(re.size()) != n * n || re.size() != im.size())
                throw CacheError(fmt::format("cache entry {} has a wrong matrix size", dir.string()));
            using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
            es.vectors.resize(n, n);
            es.vectors.real() = Eigen::Map<const RowMajor>(re.data(), n, n);
            es.vectors.imag() = Eigen::Map<const RowMajor>(im.data(), n, n);
        }
        es.operator_norm = manifest.at("operator_norm").get<double>();
        es.lattice = lattice;
        es.disorder = disorder;
        return es;
    } catch (const Json::exception& e) {
        throw CacheError(fmt::format("malformed cache manifest {}: {}", manifest_path.string(), e.what()));
    }
}

void EigenCache::store(const LatticeSpec& lattice, const DisorderSpec& disorder, const EigenSystem& es) const {
    const fs::path dir = entry(lattice, disorder);
    fs::create_directories(dir);
    const Eigen::Index n = es.size();

    Json files = Json::object();
    auto put = [&](const char* name, const std::vector<double>& data) {
        const auto bytes = to_bytes(data);
        const std::string file = std::string(name) + ".f64";
        write_file(dir / file, bytes);
        files[name] = {{"file", file}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}};
    };
    put("eigenvalues", std::vector<double>(es.values.data(), es.values.data() + n));
    if (es.has_vectors()) {
        using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        const RowMajor re = es.vectors.real();
        const RowMajor im = es.vectors.imag();
        put("vectors_re", std::vector<double>(re.data(), re.data() + n * n));
        put("vectors_im", std::vector<double>(im.data(), im.data() + n * n));
    }
    const Json manifest = {{"format_version", format_version},
                           {"identity", identity(lattice, disorder)},
                           {"size", n},
                           {"has_vectors", es.has_vectors()},
                           {"operator_norm", es.operator_norm},
                           {"byte_order", "little"},
                           {"layout", "row-major float64"},
                           {"files", files}};
    const std::string text = manifest.dump(2);
    std::vector<std::byte> bytes(text.size());
    std::memcpy(bytes.data(), text.data(), text.size());
    write_file(dir / "manifest.json", bytes);
}

}  // namespace ccclab
