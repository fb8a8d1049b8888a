#include "scar/kernels.hpp"

#include <cstdlib>
#include <cstring>

#include "scar/errors.hpp"

namespace scar::kernels {

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
#else
  return false;
#endif
}

namespace {

const Table& select() {
  const char* env = std::getenv("SCAR_KERNELS");
  if (env != nullptr && *env != '\0') {
    if (std::strcmp(env, "scalar") == 0) return scalar_table();
    if (std::strcmp(env, "avx2") == 0) {
      if (!avx2_available()) throw ConfigError("SCAR_KERNELS=avx2 but the CPU lacks AVX2/FMA");
      return avx2_table();
    }
    throw ConfigError(std::string("unknown SCAR_KERNELS value: ") + env);
  }
  return avx2_available() ? avx2_table() : scalar_table();
}

}  // namespace

const Table& active() {
  static const Table& table = select();
  return table;
}

}  // namespace scar::kernels
