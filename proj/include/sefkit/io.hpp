#pragma once

#include <string>
#include <string_view>

namespace sefkit {

// Reads a whole file; throws ValidationError when the file cannot be opened.
std::string read_file(const std::string& path);

// Writes bytes, creating parent directories as needed; throws
// ValidationError on failure.
void write_file(const std::string& path, std::string_view bytes);

}  // namespace sefkit
