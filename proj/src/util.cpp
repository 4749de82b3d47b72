#include "feasopf/util.hpp"

#include <cstdio>

namespace feasopf {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace feasopf
