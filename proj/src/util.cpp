#include "selab/util.hpp"

namespace selab {

std::string fnv1a64_hex(std::string_view data) {
  const std::uint64_t h = fnv1a64(data);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace selab
