#pragma once

// Dense double-precision GEMM kernels behind the autodiff tape.
//
// Every kernel accumulates into C (C += op(A) * op(B)); callers zero C first
// when they want a plain product. All matrices are row-major and densely
// packed. Two implementations exist: a portable scalar reference and an
// AVX2+FMA variant. The active table is chosen once at first use from the
// CPU feature bits, unless SPNAS_KERNELS=scalar|avx2 overrides it.

#include <cstddef>
#include <string_view>

namespace spnas::kernels {

struct GemmShape {
    std::size_t m; // rows of C
    std::size_t n; // cols of C
    std::size_t k; // contracted dimension
};

// C[m×n] += A[m×k] · B[k×n]
using GemmNN = void (*)(GemmShape, const double* a, const double* b, double* c);
// C[m×n] += A[m×k] · B[n×k]ᵀ
using GemmNT = void (*)(GemmShape, const double* a, const double* b, double* c);
// C[m×n] += A[k×m]ᵀ · B[k×n]
using GemmTN = void (*)(GemmShape, const double* a, const double* b, double* c);

struct KernelTable {
    std::string_view name;
    GemmNN gemm_nn;
    GemmNT gemm_nt;
    GemmTN gemm_tn;
};

const KernelTable& scalar_table();

/// nullptr when the binary was built without the AVX2 translation unit.
const KernelTable* avx2_table();

/// True when the running CPU reports both AVX2 and FMA.
bool cpu_has_avx2_fma();

/// The table used by Matrix and the tape.
const KernelTable& active();

/// Force a specific table ("scalar" or "avx2"). Returns false if unavailable.
/// Intended for tests and benchmarking; not thread-safe against concurrent
/// kernel calls.
bool select(std::string_view name);

} // namespace spnas::kernels
