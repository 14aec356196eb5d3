#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's numerical kernels.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "lhalf/numerics.hpp"
#include "lhalf/random.hpp"
#include "lhalf/solvers.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

inline Mat to_mat(const lhalf::DenseMatrix& a) {
    Mat m(a.rows(), Vec(a.cols()));
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m[i][j] = a(i, j);
    return m;
}

inline Vec to_vec(const lhalf::DenseVector& v) { return Vec(v.begin(), v.end()); }

inline lhalf::DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                        double scale = 1.0) {
    lhalf::Rng rng(seed);
    std::vector<double> e(rows * cols);
    for (auto& v : e) v = scale * rng.gaussian();
    return lhalf::DenseMatrix(rows, cols, std::move(e));
}

inline lhalf::DenseVector random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    lhalf::Rng rng(seed);
    std::vector<double> e(n);
    for (auto& v : e) v = scale * rng.gaussian();
    return lhalf::DenseVector(std::move(e));
}

// Triple-loop products.
inline Vec multiply(const Mat& a, const Vec& x) {
    Vec out(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) out[i] += a[i][j] * x[j];
    return out;
}

inline Vec multiply_transposed(const Mat& a, const Vec& r) {
    Vec out(a.empty() ? 0 : a[0].size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += a[i][j] * r[i];
    return out;
}

inline Mat gram(const Mat& a) {
    const std::size_t n = a.empty() ? 0 : a[0].size();
    Mat g(n, Vec(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t r = 0; r < a.size(); ++r) g[i][j] += a[r][i] * a[r][j];
    return g;
}

// Determinant by Gaussian elimination with partial pivoting.
inline double determinant(Mat m) {
    const std::size_t n = m.size();
    double det = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(m[r][c]) > std::abs(m[p][c])) p = r;
        if (m[p][c] == 0.0) return 0.0;
        if (p != c) {
            std::swap(m[p], m[c]);
            det = -det;
        }
        det *= m[c][c];
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = m[r][c] / m[c][c];
            for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
        }
    }
    return det;
}

// Eigenvalues of a symmetric matrix as roots of det(G - t I), found by a
// sign-change scan over the Gershgorin interval followed by bisection.
inline Vec charpoly_eigenvalues(const Mat& g, std::size_t scan = 200000) {
    const std::size_t n = g.size();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
        double radius = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) radius += std::abs(g[i][j]);
        lo = std::min(lo, g[i][i] - radius);
        hi = std::max(hi, g[i][i] + radius);
    }
    lo -= 1e-9;
    hi += 1e-9;
    auto p = [&](double t) {
        Mat m = g;
        for (std::size_t i = 0; i < n; ++i) m[i][i] -= t;
        return determinant(m);
    };
    Vec roots;
    double prev_t = lo;
    double prev_v = p(lo);
    for (std::size_t s = 1; s <= scan; ++s) {
        const double t = lo + (hi - lo) * static_cast<double>(s) / static_cast<double>(scan);
        const double v = p(t);
        if ((prev_v < 0.0) != (v < 0.0)) {
            double a = prev_t, b = t, fa = prev_v;
            for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
                const double mid = 0.5 * (a + b);
                const double fm = p(mid);
                if ((fa < 0.0) == (fm < 0.0)) {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            roots.push_back(0.5 * (a + b));
        }
        prev_t = t;
        prev_v = v;
    }
    return roots;
}

// Root of f on [a, b] by bisection; f(a) and f(b) must differ in sign.
inline double bisect(const std::function<double(double)>& f, double a, double b) {
    double fa = f(a);
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fa < 0.0) == (fm < 0.0)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    return 0.5 * (a + b);
}

// Nonzero output of the half map for |z| above threshold: the root above
// (lm/2)^(2/3) of u + lm / (4 sqrt(u)) = |z|, signed like z.
inline double half_root(double z, double lm) {
    const double az = std::abs(z);
    const double floor = std::cbrt(0.25 * lm * lm);
    const double u = bisect([&](double t) { return t + lm / (4.0 * std::sqrt(t)) - az; }, floor, az);
    return z < 0.0 ? -u : u;
}

inline double objective(const Mat& a, const Vec& y, const Vec& x, double lambda) {
    double r2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double r = -y[i];
        for (std::size_t j = 0; j < x.size(); ++j) r += a[i][j] * x[j];
        r2 += r * r;
    }
    double pen = 0.0;
    for (double v : x) pen += std::sqrt(std::abs(v));
    return r2 + lambda * pen;
}

// Least squares on the columns in cols by normal equations (Gauss-Jordan).
inline Vec restricted_least_squares(const Mat& a, const Vec& y, const std::vector<std::size_t>& cols) {
    const std::size_t k = cols.size();
    Mat m(k, Vec(k + 1, 0.0));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t r = 0; r < a.size(); ++r) m[i][j] += a[r][cols[i]] * a[r][cols[j]];
        for (std::size_t r = 0; r < a.size(); ++r) m[i][k] += a[r][cols[i]] * y[r];
    }
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < k; ++r)
            if (std::abs(m[r][c]) > std::abs(m[p][c])) p = r;
        std::swap(m[p], m[c]);
        for (std::size_t r = 0; r < k; ++r) {
            if (r == c) continue;
            const double f = m[r][c] / m[c][c];
            for (std::size_t q = c; q <= k; ++q) m[r][q] -= f * m[c][q];
        }
    }
    Vec out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = m[i][k] / m[i][i];
    return out;
}

// Minimum of T over vectors supported in one of the index sets of size at
// most max_support. Each restricted problem is minimized by a shrinking grid
// centred on its least-squares solution.
inline double support_enumeration_minimum(const Mat& a, const Vec& y, double lambda,
                                          std::size_t max_support, int points = 15,
                                          int levels = 60) {
    const std::size_t n = a.empty() ? 0 : a[0].size();
    double best = objective(a, y, Vec(n, 0.0), lambda);
    std::vector<std::size_t> cols;
    std::function<void(std::size_t)> enumerate = [&](std::size_t start) {
        if (!cols.empty()) {
            const std::size_t k = cols.size();
            Vec centre = restricted_least_squares(a, y, cols);
            double half_width = 2.0;
            Vec x(n, 0.0);
            auto eval = [&](const Vec& sub) {
                std::fill(x.begin(), x.end(), 0.0);
                for (std::size_t i = 0; i < k; ++i) x[cols[i]] = sub[i];
                return objective(a, y, x, lambda);
            };
            double local = eval(centre);
            for (int level = 0; level < levels; ++level) {
                std::vector<int> idx(k, 0);
                Vec sub(k);
                Vec arg = centre;
                for (;;) {
                    for (std::size_t i = 0; i < k; ++i)
                        sub[i] = centre[i] + half_width * (2.0 * idx[i] / (points - 1) - 1.0);
                    const double v = eval(sub);
                    if (v < local) {
                        local = v;
                        arg = sub;
                    }
                    std::size_t d = 0;
                    while (d < k && ++idx[d] == points) idx[d++] = 0;
                    if (d == k) break;
                }
                centre = arg;
                half_width *= 0.6;
            }
            best = std::min(best, local);
        }
        if (cols.size() == max_support) return;
        for (std::size_t j = start; j < n; ++j) {
            cols.push_back(j);
            enumerate(j + 1);
            cols.pop_back();
        }
    };
    enumerate(0);
    return best;
}

// Small planted instance: A with N(0, 1/m) entries, k nonzeros of magnitude
// in [0.5, 2].
inline lhalf::ProblemInstance small_instance(std::size_t n, std::size_t m, std::size_t k,
                                             std::uint64_t seed) {
    lhalf::Rng rng(seed * 7919 + 13);
    std::vector<double> e(m * n);
    for (auto& v : e) v = rng.gaussian() / std::sqrt(static_cast<double>(m));
    lhalf::DenseMatrix a(m, n, std::move(e));
    std::vector<double> t(n, 0.0);
    std::size_t placed = 0;
    while (placed < k) {
        const std::size_t j = rng.below(n);
        if (t[j] != 0.0) continue;
        const double mag = rng.uniform(0.5, 2.0);
        t[j] = rng.coin() ? mag : -mag;
        ++placed;
    }
    lhalf::DenseVector truth(std::move(t));
    Vec y = multiply(to_mat(a), to_vec(truth));
    return lhalf::ProblemInstance(std::move(a), lhalf::DenseVector(std::move(y)), std::move(truth));
}

}  // namespace oracle
