#include "kernels.hpp"

#include <cmath>

#if defined(__GNUC__) && !defined(__clang__) && defined(__x86_64__)
#define CERTDP_CLONES __attribute__((target_clones("avx2", "default")))
#else
#define CERTDP_CLONES
#endif

namespace certdp::detail {

CERTDP_CLONES void lse2(const double* __restrict a0, const double* __restrict a1, double* __restrict out,
                        std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const bool first = a0[i] >= a1[i];
        const double m = first ? a0[i] : a1[i];
        const double gap = first ? a1[i] - a0[i] : a0[i] - a1[i];
        out[i] = m + std::log(1.0 + std::exp(gap));
    }
}

CERTDP_CLONES void lse2_step(const double* __restrict a0, const double* __restrict a1, const double* __restrict s0,
                             const double* __restrict s1, double* __restrict out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const bool first = a0[i] >= a1[i];
        const double e = std::exp(first ? a1[i] - a0[i] : a0[i] - a1[i]);
        const double p_hi = 1.0 / (1.0 + e);
        const double p_lo = e * p_hi;
        const double p0 = first ? p_hi : p_lo;
        const double p1 = first ? p_lo : p_hi;
        out[i] = -std::log1p(p0 * std::expm1(-s0[i]) + p1 * std::expm1(-s1[i]));
    }
}

CERTDP_CLONES void node_levels(const double* __restrict u, const double* __restrict v0, const double* __restrict v1,
                               const std::uint32_t* __restrict idx, const double* __restrict frac, double beta,
                               double* __restrict a0, double* __restrict a1, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        const std::uint32_t j = idx[k];
        const double f = frac[k];
        a0[k] = u[2 * k] + beta * ((1.0 - f) * v0[j] + f * v0[j + 1]);
        a1[k] = u[2 * k + 1] + beta * ((1.0 - f) * v1[j] + f * v1[j + 1]);
    }
}

CERTDP_CLONES void node_steps(const double* __restrict step0, const double* __restrict step1,
                              const std::uint32_t* __restrict idx, const double* __restrict frac, double beta,
                              double* __restrict s0, double* __restrict s1, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        const std::uint32_t j = idx[k];
        const double f = frac[k];
        s0[k] = beta * ((1.0 - f) * step0[j] + f * step0[j + 1]);
        s1[k] = beta * ((1.0 - f) * step1[j] + f * step1[j + 1]);
    }
}

}  // namespace certdp::detail
