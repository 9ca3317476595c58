#include "hemo/common/sha256.hpp"

#include <fstream>

#include "hemo/common/error.hpp"

namespace hemo {

std::string sha256_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("io", "open_failed", "cannot hash missing file " + path);
    Sha256 h;
    char buf[1 << 16];
    while (is) {
        is.read(buf, sizeof(buf));
        const auto got = is.gcount();
        if (got > 0) h.update(buf, static_cast<std::size_t>(got));
    }
    return h.hex_digest();
}

} // namespace hemo
