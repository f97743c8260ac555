#ifndef TAG_TOOLS_CLI_HPP
#define TAG_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace tag::cli {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kConfigEnvVar = "TAG_CONFIG";

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kModelDomain = 3,
  kIo = 4,
};

/// Runs one `tagsim` command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tag::cli

#endif  // TAG_TOOLS_CLI_HPP
