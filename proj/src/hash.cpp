#include "sefkit/hash.hpp"

#include <array>

#include "sefkit/io.hpp"

namespace sefkit {

std::string Fnv1a64::hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::array<char, 16> out{};
    std::uint64_t v = state_;
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return std::string(out.data(), out.size());
}

std::string content_hash(std::string_view bytes) {
    return "fnv1a64:" + Fnv1a64().update(bytes).hex();
}

std::string file_hash(const std::string& path) {
    return content_hash(read_file(path));
}

}  // namespace sefkit
