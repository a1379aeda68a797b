#include "prro/digest.hpp"

#include <fstream>
#include <sstream>

#include "prro/error.hpp"

namespace prro {

std::string Digest::hex() const {
    static const char* kDigits = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = state_;
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
        v >>= 4;
    }
    return out;
}

std::string digest_string(std::string_view bytes) {
    return Digest().update(bytes).hex();
}

std::string digest_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for digest");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return digest_string(buf.str());
}

}  // namespace prro
