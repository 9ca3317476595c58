#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "hemo/common/error.hpp"

// Little-endian binary readers/writers for the container formats.
// All on-disk formats are explicitly little-endian float32/float64.

namespace hemo::io {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats assume a little-endian host");

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw Error("io", "truncated", "unexpected end of binary stream");
    return v;
}

template <typename T>
void write_vec(std::ostream& os, const std::vector<T>& v) {
    write_pod<std::uint64_t>(os, v.size());
    if (!v.empty())
        os.write(reinterpret_cast<const char*>(v.data()),
                 static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
std::vector<T> read_vec(std::istream& is) {
    const auto n = read_pod<std::uint64_t>(is);
    std::vector<T> v(n);
    if (n > 0) {
        is.read(reinterpret_cast<char*>(v.data()),
                static_cast<std::streamsize>(n * sizeof(T)));
        if (!is) throw Error("io", "truncated", "unexpected end of binary stream");
    }
    return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
    write_pod<std::uint64_t>(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
    const auto n = read_pod<std::uint64_t>(is);
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is) throw Error("io", "truncated", "unexpected end of binary stream");
    return s;
}

} // namespace hemo::io
