#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace prro {

// FNV-1a 64-bit content digest, rendered as 16 hex chars. Used for run
// manifests and schema binding; not cryptographic.
class Digest {
public:
    Digest& update(std::string_view bytes) {
        for (char c : bytes) {
            state_ ^= static_cast<unsigned char>(c);
            state_ *= 0x100000001b3ULL;
        }
        return *this;
    }

    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string digest_string(std::string_view bytes);
std::string digest_file(const std::filesystem::path& path);

}  // namespace prro
