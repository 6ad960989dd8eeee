#pragma once

#include <string_view>

namespace sparsemeter::log {

enum class Level { debug = 0, info = 1, warn = 2, quiet = 3 };

/// Messages below this level are dropped. Defaults to warn.
void set_level(Level level);
Level level();

void debug(std::string_view message);
void info(std::string_view message);
void warn(std::string_view message);

}  // namespace sparsemeter::log
