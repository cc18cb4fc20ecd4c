#pragma once

#include <cstddef>
#include <cstdint>

// Elementwise two-choice kernels of the Bellman operator. They live in their
// own translation unit so the compiler can vectorize them with the vector
// math library.
namespace certdp::detail {

// out[i] = log(exp(a0[i]) + exp(a1[i]))
void lse2(const double* a0, const double* a1, double* out, std::size_t n);

// out[i] = lse(a0, a1) - lse(a0 - s0, a1 - s1), computed as
// -log1p(p0 * expm1(-s0) + p1 * expm1(-s1)) with p = softmax(a0, a1).
void lse2_step(const double* a0, const double* a1, const double* s0, const double* s1, double* out,
               std::size_t n);

// Node levels a_d[k] = u[2k + d] + beta * lerp(v_d, idx[k], frac[k]) for
// tables with at least two knots.
void node_levels(const double* u, const double* v0, const double* v1, const std::uint32_t* idx, const double* frac,
                 double beta, double* a0, double* a1, std::size_t n);

// Interpolated steps s_d[k] = beta * lerp(step_d, idx[k], frac[k]).
void node_steps(const double* step0, const double* step1, const std::uint32_t* idx, const double* frac, double beta,
                double* s0, double* s1, std::size_t n);

}  // namespace certdp::detail
