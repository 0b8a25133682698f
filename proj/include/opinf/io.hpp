#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "opinf/common.hpp"

namespace opinf::io {

class FileError : public std::runtime_error {
public:
    explicit FileError(const std::string& what) : std::runtime_error(what) {}
};

// All binary formats are little-endian. The build targets LE hosts; fail
// loudly elsewhere instead of silently writing the wrong byte order.
static_assert(std::endian::native == std::endian::little,
              "binary file formats are little-endian");

inline void write_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), 8);
}

inline std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    if (!is) throw FileError("unexpected end of file reading u64");
    return v;
}

inline void write_f64(std::ostream& os, const double* data, std::size_t n) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(8 * n));
}

inline void read_f64(std::istream& is, double* data, std::size_t n) {
    is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(8 * n));
    if (!is) throw FileError("unexpected end of file reading f64 block");
}

/// Writes an 8-byte magic tag verbatim (embedded NULs allowed).
inline void write_magic(std::ostream& os, const char (&magic)[9]) { os.write(magic, 8); }

inline void expect_magic(std::istream& is, const char (&magic)[9], const std::string& what) {
    char buf[8];
    is.read(buf, 8);
    if (!is || std::memcmp(buf, magic, 8) != 0) throw FileError("bad magic for " + what);
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FileError("cannot open for writing: " + path);
    return os;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FileError("cannot open for reading: " + path);
    return is;
}

// Matrices are stored column-major (Eigen's native layout).
inline void write_mat(std::ostream& os, const Mat& m) { write_f64(os, m.data(), static_cast<std::size_t>(m.size())); }
inline void read_mat(std::istream& is, Mat& m) { read_f64(is, m.data(), static_cast<std::size_t>(m.size())); }

inline std::string base64_encode(const double* data, std::size_t n) {
    static const char* alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    const std::size_t len = 8 * n;
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (std::size_t i = 0; i < len; i += 3) {
        std::uint32_t chunk = std::uint32_t(bytes[i]) << 16;
        if (i + 1 < len) chunk |= std::uint32_t(bytes[i + 1]) << 8;
        if (i + 2 < len) chunk |= std::uint32_t(bytes[i + 2]);
        out.push_back(alphabet[(chunk >> 18) & 63]);
        out.push_back(alphabet[(chunk >> 12) & 63]);
        out.push_back(i + 1 < len ? alphabet[(chunk >> 6) & 63] : '=');
        out.push_back(i + 2 < len ? alphabet[chunk & 63] : '=');
    }
    return out;
}

inline std::vector<double> base64_decode_f64(const std::string& text) {
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<unsigned char> bytes;
    bytes.reserve(text.size() / 4 * 3);
    std::uint32_t chunk = 0;
    int have = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        const int v = value_of(c);
        if (v < 0) throw FileError("invalid base64 character");
        chunk = (chunk << 6) | std::uint32_t(v);
        if (++have == 4) {
            bytes.push_back(static_cast<unsigned char>((chunk >> 16) & 0xff));
            bytes.push_back(static_cast<unsigned char>((chunk >> 8) & 0xff));
            bytes.push_back(static_cast<unsigned char>(chunk & 0xff));
            chunk = 0;
            have = 0;
        }
    }
    if (have == 2) {
        bytes.push_back(static_cast<unsigned char>((chunk >> 4) & 0xff));
    } else if (have == 3) {
        bytes.push_back(static_cast<unsigned char>((chunk >> 10) & 0xff));
        bytes.push_back(static_cast<unsigned char>((chunk >> 2) & 0xff));
    } else if (have != 0) {
        throw FileError("truncated base64 input");
    }
    if (bytes.size() % 8 != 0) throw FileError("base64 payload is not a whole number of f64");
    std::vector<double> out(bytes.size() / 8);
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

/// Shortest round-trippable decimal form of a double (for CSV output).
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace opinf::io
