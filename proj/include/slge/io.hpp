#pragma once

#include <string>

namespace slge {

/// Writes `content` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partially written file. Throws Error(Io).
void write_file_atomic(const std::string& path, const std::string& content);

/// Throws Error(Io) if the file cannot be read.
std::string read_file(const std::string& path);

}  // namespace slge
