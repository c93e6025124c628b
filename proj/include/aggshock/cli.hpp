#pragma once

#include "aggshock/error.hpp"

#include <iosfwd>

namespace aggshock::cli {

// Entry point of the `aggshock` tool. Reports go to the --out paths, tables
// and JSON without --out to `out`, warnings and errors to `err`.
// Returns 0 on success, 2 on data errors, 3 on numerical errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

int exit_code(const Error& e);

}  // namespace aggshock::cli
