#pragma once

// Small file helpers: whole-file reads that transparently inflate gzip, and
// atomic writes (temp file + rename) so emitted artifacts are never observed
// half-written.

#include <string>

namespace blp::io {

// Reads the file; if the content starts with the gzip magic it is inflated.
std::string read_file_auto(const std::string& path);

// Writes via `path + ".tmp"` then renames over `path`.
void atomic_write_file(const std::string& path, const std::string& content);

}  // namespace blp::io
