#include "interplab/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace interplab {

std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("INTERPLAB_THREADS")) {
    try {
      const long v = std::stol(cap);
      if (v >= 1) n = std::min<std::size_t>(n, static_cast<std::size_t>(v));
    } catch (...) {
      // malformed cap is ignored
    }
  }
  return n;
}

}  // namespace interplab
