#pragma once

#include <string>
#include <vector>

namespace skimzoom {

// Full command-line surface, callable in-process (tests drive it directly).
// `args` excludes the program name.  Returns the process exit code:
//   0  success (including --help)
//   1  data or configuration problem (bad files, missing seed, backend down)
//   2  usage error (unknown flags, missing required options)
int run_command(std::vector<std::string> args);

}  // namespace skimzoom
