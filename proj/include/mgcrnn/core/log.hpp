#pragma once

#include <spdlog/spdlog.h>

namespace mgcrnn {

/// Applies MGCRNN_LOG_LEVEL (trace|debug|info|warn|error|off) to the default
/// spdlog logger. Unset or unknown values leave the level at info.
void configure_logging_from_env();

}  // namespace mgcrnn
