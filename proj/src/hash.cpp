#include "tscf/hash.hpp"

#include <array>
#include <fstream>

#include "tscf/errors.hpp"

namespace tscf {

std::string to_hex(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read file for hashing: " + path);
    std::array<char, 65536> buf;
    std::uint64_t h = kFnvOffset;
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h = fnv1a64(buf.data(), static_cast<std::size_t>(in.gcount()), h);
    }
    return "fnv1a64:" + to_hex(h);
}

}  // namespace tscf
