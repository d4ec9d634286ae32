#include <atomic>
#include <cstdlib>
#include <cstring>

#include "kernels.hpp"
#include "vdfield/error.hpp"

namespace vdfield {

const char* to_string(SimdLevel level) noexcept {
  switch (level) {
    case SimdLevel::kScalar: return "scalar";
    case SimdLevel::kAvx2: return "avx2";
  }
  return "unknown";
}

bool simd_supported(SimdLevel level) {
  switch (level) {
    case SimdLevel::kScalar: return true;
    case SimdLevel::kAvx2:
#if defined(VDFIELD_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

SimdLevel detect_simd_level() {
  if (const char* env = std::getenv("VDFIELD_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return SimdLevel::kScalar;
  }
  return simd_supported(SimdLevel::kAvx2) ? SimdLevel::kAvx2 : SimdLevel::kScalar;
}

namespace {

std::atomic<SimdLevel>& level_slot() {
  static std::atomic<SimdLevel> level{detect_simd_level()};
  return level;
}

}  // namespace

SimdLevel simd_level() { return level_slot().load(std::memory_order_relaxed); }

void set_simd_level(SimdLevel level) {
  if (!simd_supported(level)) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string("SIMD level not supported here: ") + to_string(level));
  }
  level_slot().store(level);
}

namespace kernels {

const KernelTable& active() {
#if defined(VDFIELD_HAVE_AVX2)
  if (simd_level() == SimdLevel::kAvx2) return avx2_table();
#endif
  return scalar_table();
}

}  // namespace kernels

}  // namespace vdfield
