// Compiled with -mavx2 -mfma. Nothing in this file may run before the
// dispatcher has confirmed CPU support.

#include "spnas/kernels.hpp"

#include <immintrin.h>

namespace spnas::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

// crow[0..n) += av * brow[0..n)
inline void axpy_row(std::size_t n, double av, const double* brow, double* crow) {
    const __m256d va = _mm256_set1_pd(av);
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
        __m256d c0 = _mm256_loadu_pd(crow + j);
        __m256d c1 = _mm256_loadu_pd(crow + j + 4);
        c0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), c0);
        c1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j + 4), c1);
        _mm256_storeu_pd(crow + j, c0);
        _mm256_storeu_pd(crow + j + 4, c1);
    }
    for (; j + 4 <= n; j += 4) {
        __m256d c0 = _mm256_loadu_pd(crow + j);
        c0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), c0);
        _mm256_storeu_pd(crow + j, c0);
    }
    for (; j < n; ++j)
        crow[j] += av * brow[j];
}

void gemm_nn_avx2(GemmShape s, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < s.m; ++i) {
        const double* arow = a + i * s.k;
        double* crow = c + i * s.n;
        for (std::size_t p = 0; p < s.k; ++p) {
            const double av = arow[p];
            if (av == 0.0)
                continue;
            axpy_row(s.n, av, b + p * s.n, crow);
        }
    }
}

void gemm_nt_avx2(GemmShape s, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < s.m; ++i) {
        const double* arow = a + i * s.k;
        for (std::size_t j = 0; j < s.n; ++j) {
            const double* brow = b + j * s.k;
            __m256d acc0 = _mm256_setzero_pd();
            __m256d acc1 = _mm256_setzero_pd();
            std::size_t p = 0;
            for (; p + 8 <= s.k; p += 8) {
                acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(arow + p), _mm256_loadu_pd(brow + p), acc0);
                acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(arow + p + 4),
                                       _mm256_loadu_pd(brow + p + 4), acc1);
            }
            for (; p + 4 <= s.k; p += 4)
                acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(arow + p), _mm256_loadu_pd(brow + p), acc0);
            double acc = hsum(_mm256_add_pd(acc0, acc1));
            for (; p < s.k; ++p)
                acc += arow[p] * brow[p];
            c[i * s.n + j] += acc;
        }
    }
}

void gemm_tn_avx2(GemmShape s, const double* a, const double* b, double* c) {
    for (std::size_t p = 0; p < s.k; ++p) {
        const double* arow = a + p * s.m;
        const double* brow = b + p * s.n;
        for (std::size_t i = 0; i < s.m; ++i) {
            const double av = arow[i];
            if (av == 0.0)
                continue;
            axpy_row(s.n, av, brow, c + i * s.n);
        }
    }
}

} // namespace

const KernelTable& avx2_table_impl() {
    static const KernelTable table{"avx2", &gemm_nn_avx2, &gemm_nt_avx2, &gemm_tn_avx2};
    return table;
}

} // namespace spnas::kernels
