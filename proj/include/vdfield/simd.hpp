#pragma once

namespace vdfield {

/// Instruction-set variant used by the batch kernels. The scalar kernels are
/// the reference; every SIMD variant must reproduce them bit-for-bit.
enum class SimdLevel { kScalar, kAvx2 };

const char* to_string(SimdLevel level) noexcept;

/// Best level the running CPU supports (honours VDFIELD_SIMD=scalar).
SimdLevel detect_simd_level();
bool simd_supported(SimdLevel level);

SimdLevel simd_level();
/// Throws InvalidArgument if the level is not supported on this CPU/build.
void set_simd_level(SimdLevel level);

}  // namespace vdfield
