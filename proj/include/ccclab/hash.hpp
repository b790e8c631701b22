#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace ccclab {

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::span<const std::byte> data);

}  // namespace ccclab
