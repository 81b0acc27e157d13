#include "mbcs/simd/backend.hpp"

#include <cstdlib>
#include <cstring>

#include "registry.hpp"

namespace mbcs::simd {

std::vector<const Backend*> available_backends() {
  std::vector<const Backend*> out;
  out.push_back(&scalar_backend());
#if defined(__x86_64__) || defined(_M_X64)
  if (const Backend* b = avx2_backend()) out.push_back(b);
#endif
#if defined(__aarch64__)
  if (const Backend* b = neon_backend()) out.push_back(b);
#endif
  return out;
}

namespace {

const Backend& resolve() {
  const char* forced = std::getenv("MBCS_SIMD");
  const auto backends = available_backends();
  if (forced != nullptr && std::strcmp(forced, "auto") != 0) {
    for (const Backend* b : backends) {
      if (std::strcmp(forced, b->name) == 0) return *b;
    }
    // Unknown or unavailable name: fall through to the default choice.
  }
  return *backends.back();
}

}  // namespace

const Backend& active_backend() {
  static const Backend& chosen = resolve();
  return chosen;
}

}  // namespace mbcs::simd
