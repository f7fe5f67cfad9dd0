#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "amic/search.hpp"

namespace amic {

// Bad flag values; the CLI maps these to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// One JSON object per line, fields in the fixed report order.
std::string window_to_jsonl(const WindowResult& w);
// Throws Error on missing or mistyped fields.
WindowResult window_from_jsonl(std::string_view line);

std::vector<std::size_t> parse_size_list(std::string_view csv, std::string_view flag);

// Entry point behind the `amic` binary; argv[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace amic
