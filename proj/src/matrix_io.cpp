#include "scnp/matrix_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "scnp/error.hpp"

namespace scnp {

namespace {

constexpr char kMagic[8] = {'S', 'C', 'N', 'P', 'M', 'A', 'T', '1'};
constexpr std::size_t kHeaderSize = 8 + 8 + 8 + 8 + 8;

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f64(std::vector<unsigned char>& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_u64(p)); }

}  // namespace

std::uint64_t fnv1a64(std::span<const unsigned char> bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<unsigned char> serialize_matrix(const StoredMatrix& m) {
    std::vector<unsigned char> buf;
    buf.reserve(kHeaderSize + m.values.size() * 8 + 8);
    for (const char ch : kMagic) buf.push_back(static_cast<unsigned char>(ch));
    put_u64(buf, m.values.rows());
    put_u64(buf, m.values.cols());
    put_f64(buf, m.alpha);
    put_f64(buf, m.epsilon);
    for (double v : m.values.values()) put_f64(buf, v);
    const std::span payload(buf.data() + kHeaderSize, m.values.size() * 8);
    put_u64(buf, fnv1a64(payload));
    return buf;
}

StoredMatrix deserialize_matrix(std::span<const unsigned char> bytes,
                                std::size_t* consumed) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
        throw VersionMismatch("not a matrix container");
    }
    if (bytes.size() < kHeaderSize) throw CorruptFile("truncated matrix header");

    const std::uint64_t rows = get_u64(bytes.data() + 8);
    const std::uint64_t cols = get_u64(bytes.data() + 16);
    if (rows != 0 && cols > std::numeric_limits<std::uint64_t>::max() / rows / 8) {
        throw CorruptFile("implausible matrix shape");
    }
    const std::uint64_t payload_bytes = rows * cols * 8;
    const std::uint64_t total = kHeaderSize + payload_bytes + 8;
    if (bytes.size() < total) throw CorruptFile("truncated matrix payload");

    const std::span payload(bytes.data() + kHeaderSize, payload_bytes);
    const std::uint64_t want = get_u64(bytes.data() + kHeaderSize + payload_bytes);
    if (fnv1a64(payload) != want) throw CorruptFile("matrix checksum mismatch");

    StoredMatrix m;
    m.alpha = get_f64(bytes.data() + 24);
    m.epsilon = get_f64(bytes.data() + 32);
    m.values = DenseMatrix(rows, cols);
    for (std::size_t i = 0; i < m.values.size(); ++i) {
        m.values.values()[i] = get_f64(bytes.data() + kHeaderSize + i * 8);
    }
    if (consumed) *consumed = total;
    return m;
}

void save_matrix(const StoredMatrix& m, const std::filesystem::path& path) {
    const auto buf = serialize_matrix(m);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

void save_matrix(const DenseMatrix& values, double alpha, double epsilon,
                 const std::filesystem::path& path) {
    StoredMatrix m;
    m.values = values;
    m.alpha = alpha;
    m.epsilon = epsilon;
    save_matrix(m, path);
}

StoredMatrix load_matrix(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
    if (f.bad()) throw IoError("read failed: " + path.string());

    std::size_t consumed = 0;
    StoredMatrix m;
    try {
        m = deserialize_matrix(buf, &consumed);
    } catch (const VersionMismatch& e) {
        throw VersionMismatch(std::string(e.what()) + ": " + path.string());
    } catch (const CorruptFile& e) {
        throw CorruptFile(std::string(e.what()) + ": " + path.string());
    }
    if (consumed != buf.size()) throw CorruptFile("trailing bytes: " + path.string());
    return m;
}

}  // namespace scnp
