#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lhalf {

/// Raised when operand shapes do not line up. The message names both shapes.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a value container is built from NaN/Inf entries.
class NonFiniteError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Power iteration ran out of iterations. Carries the last estimate.
class NotConvergedError : public std::runtime_error {
public:
    NotConvergedError(const std::string& what, double last_estimate)
        : std::runtime_error(what), last_estimate_(last_estimate) {}
    double last_estimate() const noexcept { return last_estimate_; }

private:
    double last_estimate_;
};

/// Cholesky met a non-positive pivot.
class NotSpdError : public std::runtime_error {
public:
    NotSpdError(const std::string& what, std::size_t pivot)
        : std::runtime_error(what), pivot_(pivot) {}
    std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

class DenseVector {
public:
    DenseVector() = default;
    explicit DenseVector(std::vector<double> entries);
    DenseVector(std::initializer_list<double> entries);

    static DenseVector zeros(std::size_t n);

    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    std::span<const double> span() const noexcept { return data_; }
    std::span<double> span() noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }
    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }

    bool operator==(const DenseVector&) const = default;

private:
    std::vector<double> data_;
};

/// Row-major dense matrix.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static DenseMatrix zeros(std::size_t rows, std::size_t cols);
    static DenseMatrix identity(std::size_t n);
    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

    std::span<const double> entries() const noexcept { return data_; }

    DenseMatrix transposed() const;
    std::string shape() const;

    bool operator==(const DenseMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Per-thread tally of the O(mN) kernels. Lets a harness count products
/// without instrumenting callers.
struct KernelCounters {
    std::uint64_t mat_vec = 0;
    std::uint64_t transpose_mat_vec = 0;
};

KernelCounters& kernel_counters() noexcept;
void reset_kernel_counters() noexcept;

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);
double distance2(std::span<const double> a, std::span<const double> b);
bool all_finite(std::span<const double> a) noexcept;

DenseVector mat_vec(const DenseMatrix& a, const DenseVector& x);
DenseVector transpose_mat_vec(const DenseMatrix& a, const DenseVector& r);

inline constexpr double kDefaultSpectralTol = 1e-10;
inline constexpr std::size_t kDefaultSpectralMaxIter = 5000;

/// Largest singular value of A from the power (Krylov) sequence of A^T A.
///
/// Runs Lanczos with full reorthogonalization from the normalized all-ones
/// vector, so near-degenerate top singular values converge in tens of steps
/// instead of thousands. If the Rayleigh quotient stalls below tol * ||A||_F
/// (ones orthogonal to the top singular space) or the Krylov space becomes
/// invariant, it continues from a fixed-seed random vector. Stops once the
/// Ritz residual is below tol * estimate, which gives
/// est <= ||A||_2 <= est * (1 + 10 tol). max_iter bounds the Krylov steps.
double spectral_norm(const DenseMatrix& a, double tol = kDefaultSpectralTol,
                     std::size_t max_iter = kDefaultSpectralMaxIter);

/// spectral_norm inflated by (1 + 10 tol); never below the true norm.
double spectral_norm_upper(const DenseMatrix& a, double tol = kDefaultSpectralTol,
                           std::size_t max_iter = kDefaultSpectralMaxIter);

double frobenius_norm(const DenseMatrix& a);

/// A_S^T A_S for the listed columns.
DenseMatrix column_gram(const DenseMatrix& a, std::span<const std::size_t> cols);

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
std::vector<double> symmetric_eigenvalues(const DenseMatrix& sym, double tol = 1e-12);

struct SymmetricEigen {
    std::vector<double> values;  // ascending
    DenseMatrix vectors;         // column j pairs with values[j]
};

/// Eigenvalues and orthonormal eigenvectors by cyclic Jacobi rotations.
SymmetricEigen symmetric_eigen(const DenseMatrix& sym, double tol = 1e-12);

struct GramExtremes {
    double sigma_min = 0.0;
    double sigma_max = 0.0;
};

/// Extremal eigenvalues of A_I^T A_I.
GramExtremes gram_extremal_singular_values(const DenseMatrix& a,
                                           std::span<const std::size_t> cols);

/// Solves M x = b for symmetric positive definite M by Cholesky. Takes M by
/// value; callers that no longer need it can move it in to skip the copy.
DenseVector solve_spd(DenseMatrix m, const DenseVector& b);

}  // namespace lhalf
