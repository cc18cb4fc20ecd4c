#include "certdp/chi_squared.hpp"

#include <algorithm>
#include <cmath>

#include "certdp/errors.hpp"

namespace certdp {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxTerms = 10000;

double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < kMaxTerms; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Q(a, x) by the Lentz continued fraction.
double gamma_q_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxTerms; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double regularized_gamma_p(double a, double x) {
    require(a > 0.0, "incomplete gamma needs a > 0");
    require(x >= 0.0, "incomplete gamma needs x >= 0");
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_fraction(a, x);
}

double chi_squared_cdf(double x, double k) {
    require(k > 0.0, "chi-squared degrees of freedom must be positive");
    if (x <= 0.0) return 0.0;
    return regularized_gamma_p(0.5 * k, 0.5 * x);
}

double chi_squared_quantile(double p, double k) {
    require(p > 0.0 && p < 1.0, "chi-squared quantile needs p in (0, 1)");
    require(k > 0.0, "chi-squared degrees of freedom must be positive");
    double lo = 0.0;
    double hi = std::max(1.0, k);
    while (chi_squared_cdf(hi, k) < p) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (chi_squared_cdf(mid, k) < p) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace certdp
