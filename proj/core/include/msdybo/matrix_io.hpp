#pragma once

#include "msdybo/msbasis.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace msdybo {

// Plain-text dense matrix:
//   %dybo-matrix 1 <rows> <cols>
//   one row per line, values at full precision.
void write_matrix(std::ostream& out, const Matrix& m);
[[nodiscard]] Matrix read_matrix(std::istream& in, const std::string& source = "<stream>");
void write_matrix(const std::filesystem::path& path, const Matrix& m);
[[nodiscard]] Matrix read_matrix(const std::filesystem::path& path);

// Offline space cache:
//   %dybo-offline 1
//   hash <16 hex digits>
//   prolongation <rows> <cols> <nnz>
//   neighborhoods <N_in>
//   node <i> <l_i> <k> <λ_1> ... <λ_k>      (N_in lines)
//   <row> <col> <value>                     (nnz lines)
void write_offline_cache(const std::filesystem::path& path, const OfflineSpace& space, std::uint64_t hash);
/// Reads a cache; throws InvalidArgument on a malformed file or when `expected_hash` (if nonzero) differs.
[[nodiscard]] OfflineSpace read_offline_cache(const std::filesystem::path& path, std::uint64_t expected_hash = 0);

/// 64-bit FNV-1a.
[[nodiscard]] std::uint64_t fnv1a(std::string_view data);
[[nodiscard]] std::string hex64(std::uint64_t value);

}  // namespace msdybo
