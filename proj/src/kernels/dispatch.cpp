#include "spnas/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace spnas::kernels {

#if defined(SPNAS_HAVE_AVX2)
const KernelTable& avx2_table_impl();
#endif

const KernelTable* avx2_table() {
#if defined(SPNAS_HAVE_AVX2)
    return &avx2_table_impl();
#else
    return nullptr;
#endif
}

bool cpu_has_avx2_fma() {
#if defined(SPNAS_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

const KernelTable* detect() {
    if (const char* env = std::getenv("SPNAS_KERNELS")) {
        const std::string want(env);
        if (want == "scalar")
            return &scalar_table();
        if (want == "avx2" && avx2_table() && cpu_has_avx2_fma())
            return avx2_table();
    }
    if (avx2_table() && cpu_has_avx2_fma())
        return avx2_table();
    return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
    static std::atomic<const KernelTable*> current{detect()};
    return current;
}

} // namespace

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

bool select(std::string_view name) {
    if (name == "scalar") {
        slot().store(&scalar_table());
        return true;
    }
    if (name == "avx2" && avx2_table() && cpu_has_avx2_fma()) {
        slot().store(avx2_table());
        return true;
    }
    return false;
}

} // namespace spnas::kernels
