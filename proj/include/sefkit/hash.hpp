#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace sefkit {

// 64-bit FNV-1a. Manifests use it to fingerprint inputs so reruns can be
// checked for identical configuration; it is not a cryptographic hash.
class Fnv1a64 {
public:
    Fnv1a64& update(std::string_view bytes) {
        for (unsigned char c : bytes) {
            state_ ^= c;
            state_ *= 0x100000001b3ull;
        }
        return *this;
    }

    std::uint64_t value() const { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ull;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
    return Fnv1a64().update(bytes).value();
}

// "fnv1a64:<16 hex digits>" over the raw bytes.
std::string content_hash(std::string_view bytes);

// Same digest over a file's bytes; throws ValidationError if unreadable.
std::string file_hash(const std::string& path);

}  // namespace sefkit
