#pragma once

#include <iosfwd>

namespace permloss {

inline constexpr int kSchemaVersion = 1;

/// Exit codes: 0 pass, 2 check failure, 1 usage or runtime error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace permloss
