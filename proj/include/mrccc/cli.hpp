#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mrccc/baselines.hpp"

namespace mrccc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs one of the subcommands simulate, fit, screen, benchmark. Returns 0 on
/// success, 1 on a usage error (help text goes to `err`) and 2 on a data or
/// numerical error.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out,
                 std::ostream& err);
int cli_dispatch(int argc, const char* const* argv);

/// `method,n,score,decision,beta_x,beta_xz,<extras...>` header plus one row.
void write_method_result_csv(std::ostream& out, const MethodResult& r,
                             Eigen::Index n);

}  // namespace mrccc
