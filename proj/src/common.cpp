#include "treereg/common.hpp"

#include <cstdio>

namespace treereg {

void log_warning(const std::string& msg) {
  std::fprintf(stderr, "treereg: warning: %s\n", msg.c_str());
}

}  // namespace treereg
