#pragma once

#include <iosfwd>

#include "g3d/config.hpp"

G3D_NAMESPACE_BEGIN

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Commands: init, optimize, extract, render, fuse-debug, validate. Usage
/// errors and configuration problems return 2, failures while running 3.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

G3D_NAMESPACE_END
