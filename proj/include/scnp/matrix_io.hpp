#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>

#include "scnp/dense.hpp"

namespace scnp {

// Dense matrix plus the two scalars that identify a propagation artifact.
// Either scalar may be NaN when it does not apply to the stored matrix.
struct StoredMatrix {
    DenseMatrix values;
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double epsilon = std::numeric_limits<double>::quiet_NaN();
};

// Binary container: magic "SCNPMAT1", u64 rows, u64 cols, f64 alpha,
// f64 epsilon, row-major little-endian f64 payload, trailing u64 FNV-1a
// checksum of the payload bytes. All integers and floats little-endian.
void save_matrix(const StoredMatrix& m, const std::filesystem::path& path);
void save_matrix(const DenseMatrix& values, double alpha, double epsilon,
                 const std::filesystem::path& path);

// Throws VersionMismatch on wrong magic, CorruptFile on truncation, trailing
// bytes, or checksum mismatch, IoError when the file cannot be read.
StoredMatrix load_matrix(const std::filesystem::path& path);

// The same container as raw bytes, for embedding in other files. The
// deserializer reads one container from the front of `bytes` and reports
// how many bytes it consumed; extra bytes after that are the caller's.
std::vector<unsigned char> serialize_matrix(const StoredMatrix& m);
StoredMatrix deserialize_matrix(std::span<const unsigned char> bytes,
                                std::size_t* consumed = nullptr);

std::uint64_t fnv1a64(std::span<const unsigned char> bytes);

}  // namespace scnp
