#include "sefkit/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sefkit/error.hpp"

namespace sefkit {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        throw ValidationError("read failed: " + path);
    }
    return std::move(buf).str();
}

void write_file(const std::string& path, std::string_view bytes) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ValidationError("cannot open file for writing: " + path);
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
        throw ValidationError("write failed: " + path);
    }
}

}  // namespace sefkit
