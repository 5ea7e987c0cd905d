#pragma once

#include "mlac/cli/config.hpp"

#include <exception>
#include <functional>

namespace mlac::cli {

/// Each command writes its artifacts under config.output.dir and returns the
/// report that was written to report.json there.
Json cmd_classify(const RunConfig& config);
Json cmd_segment_image(const RunConfig& config);
Json cmd_sbm_bench(const RunConfig& config);
Json cmd_fastsum_bench(const RunConfig& config);
Json cmd_eig(const RunConfig& config);

/// 0 success, 2 configuration or argument error, 3 numerical failure, 4 I/O error.
int exit_code(const std::exception& e);

}  // namespace mlac::cli
