#ifndef TAG_IO_HPP
#define TAG_IO_HPP

#include <string>

namespace tag {

/// Writes to `<path>.tmp` then renames over `path`. Throws IoError.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace tag

#endif  // TAG_IO_HPP
