#include "spnas/kernels.hpp"

namespace spnas::kernels {
namespace {

void gemm_nn_scalar(GemmShape s, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < s.m; ++i) {
        double* crow = c + i * s.n;
        const double* arow = a + i * s.k;
        for (std::size_t p = 0; p < s.k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * s.n;
            for (std::size_t j = 0; j < s.n; ++j)
                crow[j] += av * brow[j];
        }
    }
}

void gemm_nt_scalar(GemmShape s, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < s.m; ++i) {
        const double* arow = a + i * s.k;
        for (std::size_t j = 0; j < s.n; ++j) {
            const double* brow = b + j * s.k;
            double acc = 0.0;
            for (std::size_t p = 0; p < s.k; ++p)
                acc += arow[p] * brow[p];
            c[i * s.n + j] += acc;
        }
    }
}

void gemm_tn_scalar(GemmShape s, const double* a, const double* b, double* c) {
    for (std::size_t p = 0; p < s.k; ++p) {
        const double* arow = a + p * s.m;
        const double* brow = b + p * s.n;
        for (std::size_t i = 0; i < s.m; ++i) {
            const double av = arow[i];
            double* crow = c + i * s.n;
            for (std::size_t j = 0; j < s.n; ++j)
                crow[j] += av * brow[j];
        }
    }
}

} // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{"scalar", &gemm_nn_scalar, &gemm_nt_scalar, &gemm_tn_scalar};
    return table;
}

} // namespace spnas::kernels
