#ifndef QASL_IO_H_
#define QASL_IO_H_

#include <filesystem>
#include <string>
#include <string_view>

namespace qasl {

// Throws Error("io_error") when the file cannot be read.
std::string ReadFile(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view content);

}  // namespace qasl

#endif  // QASL_IO_H_
