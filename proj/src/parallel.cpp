#include "dlift/parallel.hpp"

#include <cstdlib>
#include <string>

namespace dlift {

unsigned default_threads() {
  if (const char* env = std::getenv("DLIFT_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace dlift
