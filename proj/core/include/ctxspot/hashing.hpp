#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ctxspot {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// SplitMix64 finalizer; used to derive independent seeds from one root seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// 16 lowercase hex digits.
std::string hex64(std::uint64_t value);

}  // namespace ctxspot
