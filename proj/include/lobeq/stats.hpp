#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace lobeq::stats {

namespace detail {

// Continued fraction for the regularized incomplete beta function
// (modified Lentz iteration).
inline double betacf(double a, double b, double x) {
    constexpr int max_it = 300;
    constexpr double eps = 3.0e-14;
    constexpr double fpmin = 1.0e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_it; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double ibeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * detail::betacf(a, b, x) / a;
    return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

/// P(T <= t) for Student's t with df degrees of freedom.
inline double student_t_cdf(double t, int df) {
    if (df < 1) throw std::invalid_argument("student_t_cdf: df must be >= 1");
    const double x = df / (df + t * t);
    const double tail = 0.5 * ibeta(0.5 * df, 0.5, x);
    return t >= 0.0 ? 1.0 - tail : tail;
}

/// Two-sided 95% critical value (the 0.975 quantile) of Student's t.
inline double t_critical_975(int df) {
    if (df < 1) throw std::invalid_argument("t_critical_975: df must be >= 1");
    double lo = 0.0, hi = 700.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (student_t_cdf(mid, df) < 0.975 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct BatchMeans {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double half_width = std::numeric_limits<double>::infinity();
    int batches = 0;
};

/// Mean and nominal-95% half width from independent batch means.
inline BatchMeans batch_means(std::span<const double> values) {
    BatchMeans out;
    out.batches = static_cast<int>(values.size());
    if (values.empty()) return out;
    double s = 0.0;
    for (double v : values) s += v;
    out.mean = s / out.batches;
    if (out.batches < 2) return out;
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    const double sd = std::sqrt(ss / (out.batches - 1));
    out.half_width = t_critical_975(out.batches - 1) * sd / std::sqrt(double(out.batches));
    return out;
}

/// Kolmogorov-Smirnov statistic of samples against a CDF callable.
template <typename Cdf>
double ks_statistic(std::vector<double> samples, Cdf&& cdf) {
    if (samples.empty()) throw std::invalid_argument("ks_statistic: no samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::fabs((i + 1) / n - f));
        d = std::max(d, std::fabs(i / n - f));
    }
    return d;
}

/// Least-squares slope of y against x.
inline double lsq_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("lsq_slope: need two equally sized samples");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("lsq_slope: degenerate x");
    return sxy / sxx;
}

inline double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / v.size();
}

}  // namespace lobeq::stats
