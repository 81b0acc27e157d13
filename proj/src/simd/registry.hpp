#pragma once

#include "mbcs/simd/backend.hpp"

namespace mbcs::simd {

// Per-architecture backends. Each returns nullptr when the variant was not
// compiled in or the running CPU cannot execute it.
#if defined(__x86_64__) || defined(_M_X64)
const Backend* avx2_backend();
#endif
#if defined(__aarch64__)
const Backend* neon_backend();
#endif

}  // namespace mbcs::simd
