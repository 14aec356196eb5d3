#include "lhalf/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "lhalf/random.hpp"

namespace lhalf {
namespace {

void require_finite(std::span<const double> v, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            std::ostringstream os;
            os << what << ": non-finite entry at position " << i;
            throw NonFiniteError(os.str());
        }
    }
}

std::string vec_shape(std::size_t n) { return "(" + std::to_string(n) + ")"; }

// Four simultaneous dot products sharing the left operand.
inline void dot4(const double* a, const double* b0, const double* b1, const double* b2,
                 const double* b3, std::size_t n, double out[4]) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
#pragma omp simd reduction(+ : s0, s1, s2, s3)
    for (std::size_t k = 0; k < n; ++k) {
        const double ak = a[k];
        s0 += ak * b0[k];
        s1 += ak * b1[k];
        s2 += ak * b2[k];
        s3 += ak * b3[k];
    }
    out[0] = s0;
    out[1] = s1;
    out[2] = s2;
    out[3] = s3;
}

inline double dot_raw(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
#pragma omp simd reduction(+ : s)
    for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
    return s;
}

}  // namespace

DenseVector::DenseVector(std::vector<double> entries) : data_(std::move(entries)) {
    require_finite(data_, "DenseVector");
}

DenseVector::DenseVector(std::initializer_list<double> entries) : data_(entries) {
    require_finite(data_, "DenseVector");
}

DenseVector DenseVector::zeros(std::size_t n) { return DenseVector(std::vector<double>(n, 0.0)); }

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
        std::ostringstream os;
        os << "DenseMatrix: " << data_.size() << " entries cannot fill a " << rows_ << "x"
           << cols_ << " matrix";
        throw DimensionError(os.str());
    }
    require_finite(data_, "DenseMatrix");
}

DenseMatrix DenseMatrix::zeros(std::size_t rows, std::size_t cols) {
    return DenseMatrix(rows, cols, std::vector<double>(rows * cols, 0.0));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m = zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("DenseMatrix::from_rows: ragged rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return DenseMatrix(r, c, std::move(data));
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t = zeros(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

std::string DenseMatrix::shape() const {
    return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

KernelCounters& kernel_counters() noexcept {
    thread_local KernelCounters counters;
    return counters;
}

void reset_kernel_counters() noexcept { kernel_counters() = KernelCounters{}; }

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw DimensionError("dot: length mismatch " + vec_shape(a.size()) + " vs " +
                             vec_shape(b.size()));
    return dot_raw(a.data(), b.data(), a.size());
}

double norm2(std::span<const double> a) {
    // Scale by the max magnitude so squares cannot overflow.
    const double scale = norm_inf(a);
    if (scale == 0.0) return 0.0;
    double s = 0.0;
    for (double v : a) {
        const double t = v / scale;
        s += t * t;
    }
    return scale * std::sqrt(s);
}

double norm_inf(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

double distance2(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw DimensionError("distance2: length mismatch " + vec_shape(a.size()) + " vs " +
                             vec_shape(b.size()));
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

bool all_finite(std::span<const double> a) noexcept {
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

DenseVector mat_vec(const DenseMatrix& a, const DenseVector& x) {
    if (a.cols() != x.size())
        throw DimensionError("mat_vec: matrix " + a.shape() + " times vector " +
                             vec_shape(x.size()));
    ++kernel_counters().mat_vec;
    std::vector<double> out(a.rows());
    const double* xp = x.span().data();
    for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot_raw(a.row(i).data(), xp, a.cols());
    return DenseVector(std::move(out));
}

DenseVector transpose_mat_vec(const DenseMatrix& a, const DenseVector& r) {
    if (a.rows() != r.size())
        throw DimensionError("transpose_mat_vec: transpose of " + a.shape() +
                             " times vector " + vec_shape(r.size()));
    ++kernel_counters().transpose_mat_vec;
    std::vector<double> out(a.cols(), 0.0);
    double* op = out.data();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double ri = r[i];
        if (ri == 0.0) continue;
        const double* row = a.row(i).data();
#pragma omp simd
        for (std::size_t j = 0; j < a.cols(); ++j) op[j] += ri * row[j];
    }
    return DenseVector(std::move(out));
}

double frobenius_norm(const DenseMatrix& a) { return norm2(a.entries()); }

double spectral_norm(const DenseMatrix& a, double tol, std::size_t max_iter) {
    if (!(tol > 0.0)) throw std::invalid_argument("spectral_norm: tol must be positive");
    const double fro = frobenius_norm(a);
    if (fro == 0.0) throw std::invalid_argument("spectral_norm: matrix is zero");

    const std::size_t n = a.cols();
    const std::size_t max_steps = std::max<std::size_t>(1, std::min(max_iter, n));
    Rng rng(0x5EEDULL);

    std::vector<DenseVector> basis;
    std::vector<double> alpha;
    std::vector<double> beta;  // beta[j] couples basis[j] and basis[j + 1]

    auto orthogonalize = [&](DenseVector& w) {
        // Two passes of classical Gram-Schmidt keep the basis orthonormal.
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : basis) {
                const double c = dot(q.span(), w.span());
                for (std::size_t i = 0; i < n; ++i) w[i] -= c * q[i];
            }
        }
    };
    auto random_direction = [&]() -> std::optional<DenseVector> {
        for (int attempt = 0; attempt < 4; ++attempt) {
            std::vector<double> r(n);
            for (auto& e : r) e = rng.gaussian();
            DenseVector v(std::move(r));
            orthogonalize(v);
            const double vn = norm2(v.span());
            if (vn > 1e-8) {
                for (auto& e : v) e /= vn;
                return v;
            }
        }
        return std::nullopt;
    };

    DenseVector q(std::vector<double>(n, 1.0 / std::sqrt(static_cast<double>(n))));
    double theta = 0.0;
    bool restarted = false;
    for (std::size_t step = 0; step < max_steps; ++step) {
        DenseVector w = transpose_mat_vec(a, mat_vec(a, q));
        alpha.push_back(dot(q.span(), w.span()));
        basis.push_back(q);
        orthogonalize(w);
        const double b = norm2(w.span());

        // Ritz pair of the projected tridiagonal matrix.
        const std::size_t k = alpha.size();
        DenseMatrix t = DenseMatrix::zeros(k, k);
        for (std::size_t i = 0; i < k; ++i) t(i, i) = alpha[i];
        for (std::size_t i = 0; i + 1 < k; ++i) t(i, i + 1) = t(i + 1, i) = beta[i];
        const SymmetricEigen ritz = symmetric_eigen(t);
        theta = std::max(ritz.values.back(), 0.0);
        const double residual = b * std::abs(ritz.vectors(k - 1, k - 1));

        if (!restarted && std::sqrt(theta) < tol * fro) {
            // The start vector sees none of the range of A^T A.
            restarted = true;
            basis.clear();
            alpha.clear();
            beta.clear();
            auto fresh = random_direction();
            if (!fresh) break;
            q = std::move(*fresh);
            continue;
        }
        if (theta > 0.0 && residual <= tol * theta) {
            if (b > 1e-12 * theta || k == n) return std::sqrt(theta);
        }
        if (k == n) return std::sqrt(theta);
        if (b <= 1e-12 * std::max(theta, fro * fro)) {
            // Invariant subspace: continue the basis with a fresh direction so
            // eigenvalues outside it are not missed.
            auto fresh = random_direction();
            if (!fresh) return std::sqrt(theta);
            beta.push_back(0.0);
            q = std::move(*fresh);
            continue;
        }
        beta.push_back(b);
        for (auto& e : w) e /= b;
        q = std::move(w);
    }
    throw NotConvergedError("spectral_norm: Krylov iteration did not converge in " +
                                std::to_string(max_steps) + " steps",
                            std::sqrt(theta));
}

double spectral_norm_upper(const DenseMatrix& a, double tol, std::size_t max_iter) {
    return spectral_norm(a, tol, max_iter) * (1.0 + 10.0 * tol);
}

DenseMatrix column_gram(const DenseMatrix& a, std::span<const std::size_t> cols) {
    const std::size_t k = cols.size();
    for (std::size_t c : cols) {
        if (c >= a.cols())
            throw std::out_of_range("column_gram: column index " + std::to_string(c) +
                                    " out of range for " + a.shape());
    }
    DenseMatrix g = DenseMatrix::zeros(k, k);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto row = a.row(r);
        for (std::size_t p = 0; p < k; ++p) {
            const double vp = row[cols[p]];
            if (vp == 0.0) continue;
            for (std::size_t q = p; q < k; ++q) g(p, q) += vp * row[cols[q]];
        }
    }
    for (std::size_t p = 0; p < k; ++p)
        for (std::size_t q = 0; q < p; ++q) g(p, q) = g(q, p);
    return g;
}

SymmetricEigen symmetric_eigen(const DenseMatrix& sym, double tol) {
    if (sym.rows() != sym.cols())
        throw DimensionError("symmetric_eigen: matrix " + sym.shape() + " is not square");
    const std::size_t n = sym.rows();
    DenseMatrix a = sym;
    DenseMatrix v = DenseMatrix::identity(n);
    const double scale = frobenius_norm(a);

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) s += a(p, q) * a(p, q);
        return std::sqrt(2.0 * s);
    };

    // Sweep until the off-diagonal mass is at roundoff level; convergence is
    // quadratic so this costs a sweep or two past the requested tolerance.
    const double target = std::min(tol, 1e-14) * scale;
    for (int sweep = 0; sweep < 100 && scale > 0.0 && off_norm() > target; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
    SymmetricEigen out{std::vector<double>(n), DenseMatrix::zeros(n, n)};
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = v(k, order[j]);
    }
    return out;
}

std::vector<double> symmetric_eigenvalues(const DenseMatrix& sym, double tol) {
    return symmetric_eigen(sym, tol).values;
}

GramExtremes gram_extremal_singular_values(const DenseMatrix& a,
                                           std::span<const std::size_t> cols) {
    if (cols.empty())
        throw std::invalid_argument("gram_extremal_singular_values: empty column set");
    const auto eig = symmetric_eigenvalues(column_gram(a, cols));
    // The Gram is PSD; tiny negative eigenvalues are roundoff.
    const double lo = std::max(eig.front(), 0.0);
    const double hi = std::max(eig.back(), lo);
    return {lo, hi};
}

DenseVector solve_spd(DenseMatrix m, const DenseVector& b) {
    const std::size_t n = m.rows();
    if (m.cols() != n)
        throw DimensionError("solve_spd: matrix " + m.shape() + " is not square");
    if (b.size() != n)
        throw DimensionError("solve_spd: matrix " + m.shape() + " with right-hand side " +
                             vec_shape(b.size()));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const double tol = 1e-10 * std::max({1.0, std::abs(m(i, j)), std::abs(m(j, i))});
            if (std::abs(m(i, j) - m(j, i)) > tol) {
                std::ostringstream os;
                os << "solve_spd: matrix is not symmetric at (" << i << "," << j << ")";
                throw NotSpdError(os.str(), i);
            }
        }
    }

    // Row-oriented Cholesky, lower factor overwrites the lower triangle.
    auto factor_entry = [&](std::size_t i, std::size_t j, double dotv) {
        if (i == j) {
            const double d = m(i, i) - dotv;
            if (!(d > 0.0)) {
                std::ostringstream os;
                os << "solve_spd: matrix is not positive definite (pivot " << i << " = " << d
                   << ")";
                throw NotSpdError(os.str(), i);
            }
            m(i, i) = std::sqrt(d);
        } else {
            m(i, j) = (m(i, j) - dotv) / m(j, j);
        }
    };

    std::size_t i0 = 0;
    for (; i0 + 4 <= n; i0 += 4) {
        const double* r0 = m.row(i0).data();
        const double* r1 = m.row(i0 + 1).data();
        const double* r2 = m.row(i0 + 2).data();
        const double* r3 = m.row(i0 + 3).data();
        double s[4];
        for (std::size_t j = 0; j < i0; ++j) {
            dot4(m.row(j).data(), r0, r1, r2, r3, j, s);
            for (std::size_t t = 0; t < 4; ++t) factor_entry(i0 + t, j, s[t]);
        }
        for (std::size_t i = i0; i < i0 + 4; ++i) {
            const double* ri = m.row(i).data();
            for (std::size_t j = i0; j <= i; ++j) factor_entry(i, j, dot_raw(ri, m.row(j).data(), j));
        }
    }
    for (std::size_t i = i0; i < n; ++i) {
        const double* ri = m.row(i).data();
        for (std::size_t j = 0; j <= i; ++j) factor_entry(i, j, dot_raw(ri, m.row(j).data(), j));
    }

    // L z = b, then L^T x = z.
    std::vector<double> x(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = (x[i] - dot_raw(m.row(i).data(), x.data(), i)) / m(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        x[ii] /= m(ii, ii);
        const double xi = x[ii];
        const double* row = m.row(ii).data();
        for (std::size_t k = 0; k < ii; ++k) x[k] -= row[k] * xi;
    }
    return DenseVector(std::move(x));
}

}  // namespace lhalf
