#pragma once

#include <cstdint>
#include <string>

#include "frbmed/bootstrap.hpp"

namespace frbmed {

// Binary replicate file, all integers and doubles little-endian:
//   "FRBMREP\0"                    8-byte magic
//   u16 major, u16 minor           format version
//   u64 length, bytes              JSON header (seed, R, labels, method,
//                                  model hash, config, fitted model)
//   matrix blocks                  u64 rows, u64 cols, rows*cols doubles in
//                                  row-major order: effect replicates, one
//                                  block per equation of coefficient
//                                  replicates, jackknife estimates
//   u64 checksum                   FNV-1a 64 over every preceding byte
inline constexpr std::uint16_t kReplicateFormatMajor = 1;
inline constexpr std::uint16_t kReplicateFormatMinor = 0;

std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t hash = 0xCBF29CE484222325ULL);

/// FNV-1a of the canonical formula text.
std::uint64_t model_hash(const ModelSpec& spec);

std::string encode_replicates(const BootstrapResult& result);
/// Throws VersionMismatch for a newer major version, CorruptFile otherwise.
BootstrapResult decode_replicates(const std::string& bytes);

void save_replicates(const BootstrapResult& result, const std::string& path);
BootstrapResult load_replicates(const std::string& path);

}  // namespace frbmed
