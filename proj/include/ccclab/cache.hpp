#pragma once

#include "ccclab/config.hpp"
#include "ccclab/model.hpp"
#include "ccclab/spectral.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace ccclab {

/// A cache entry failed its checksum or is structurally broken.
class CacheError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// On-disk eigendata, one directory per (lattice, disorder, seed, realization):
///   manifest.json, eigenvalues.f64, vectors_re.f64, vectors_im.f64
/// Arrays are little-endian float64, matrices row-major.
class EigenCache {
public:
    static constexpr int format_version = 1;

    explicit EigenCache(std::filesystem::path root);

    /// nullopt on a miss (absent entry, other format version, or no vectors
    /// when vectors are wanted). Throws CacheError on a checksum mismatch.
    std::optional<EigenSystem> load(const LatticeSpec& lattice, const DisorderSpec& disorder, SolveMode mode) const;
    void store(const LatticeSpec& lattice, const DisorderSpec& disorder, const EigenSystem& es) const;

    std::filesystem::path entry(const LatticeSpec& lattice, const DisorderSpec& disorder) const;
    const std::filesystem::path& root() const { return root_; }

    /// Canonical identity of a realization (also the manifest's identity block).
    static Json identity(const LatticeSpec& lattice, const DisorderSpec& disorder);

private:
    std::filesystem::path root_;
};

}  // namespace ccclab
