//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <iosfwd>

namespace solgraph {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

// Entry point of the `solgraph` binary. Writes the one-line summary (or the
// requested predictions) to `out` and diagnostics to `err`.
int dispatch(int argc, const char *const *argv, std::ostream &out,
             std::ostream &err);

}  // namespace solgraph
