#pragma once

// Self-contained dense symmetric eigensolver (cyclic Jacobi) and the derived
// matrix functions the rest of the toolkit needs: inverse, inverse square
// root, spectral norm. Dimensions here are small (n <= ~64); Jacobi gives
// high relative accuracy and a deterministic result, which keeps certificate
// output byte-stable across runs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "pframe/errors.hpp"

namespace pframe {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec sub(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vec scaled(const Vec& a, double c) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = c * a[i];
    return r;
}

inline void axpy(double c, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

/// Dense row-major matrix of doubles.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }

    Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    bool is_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return std::sqrt(s);
    }

    double max_abs() const {
        double s = 0.0;
        for (double v : data_) s = std::max(s, std::abs(v));
        return s;
    }

    Vec apply(const Vec& x) const {
        if (x.size() != cols_) throw DimensionMismatch("matrix-vector size mismatch");
        Vec y(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw DimensionMismatch("matrix product size mismatch");
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t l = 0; l < a.cols_; ++l) {
                const double ail = a(i, l);
                if (ail == 0.0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += ail * b(l, j);
            }
        return c;
    }

    friend Matrix operator-(const Matrix& a, const Matrix& b) {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
            throw DimensionMismatch("matrix difference size mismatch");
        Matrix c(a.rows_, a.cols_);
        for (std::size_t i = 0; i < a.data_.size(); ++i) c.data_[i] = a.data_[i] - b.data_[i];
        return c;
    }

    friend Matrix operator+(const Matrix& a, const Matrix& b) {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
            throw DimensionMismatch("matrix sum size mismatch");
        Matrix c(a.rows_, a.cols_);
        for (std::size_t i = 0; i < a.data_.size(); ++i) c.data_[i] = a.data_[i] + b.data_[i];
        return c;
    }

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

/// Square symmetric matrix; (M + M^t)/2 is taken at construction and inputs
/// further than 1e-10 * (1 + max|M|) from symmetric are rejected.
class SymMatrix {
  public:
    SymMatrix() = default;

    explicit SymMatrix(Matrix m) {
        if (m.rows() != m.cols()) throw DimensionMismatch("SymMatrix requires a square matrix");
        if (!m.is_finite()) throw Error("SymMatrix requires finite entries");
        double asym = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = i + 1; j < m.cols(); ++j)
                asym = std::max(asym, std::abs(m(i, j) - m(j, i)));
        if (asym > 1e-10 * (1.0 + m.max_abs()))
            throw Error("matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = i + 1; j < m.cols(); ++j) {
                const double v = 0.5 * (m(i, j) + m(j, i));
                m(i, j) = v;
                m(j, i) = v;
            }
        mat_ = std::move(m);
    }

    std::size_t dim() const { return mat_.rows(); }
    double operator()(std::size_t i, std::size_t j) const { return mat_(i, j); }
    const Matrix& mat() const { return mat_; }

    double trace() const {
        double s = 0.0;
        for (std::size_t i = 0; i < dim(); ++i) s += mat_(i, i);
        return s;
    }

  private:
    Matrix mat_;
};

/// Eigenvalues ascending; eigenvectors are the orthonormal columns of `vectors`.
struct EigenDecomposition {
    Vec values;
    Matrix vectors;

    Vec vector(std::size_t k) const {
        Vec v(vectors.rows());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = vectors(i, k);
        return v;
    }
};

/// Cyclic Jacobi diagonalization. Sweeps run until the off-diagonal
/// Frobenius mass reaches the machine-epsilon floor (well below the
/// 1e-14 * ||M||_F contract); NoConvergence only if 100 sweeps leave the
/// off-diagonal mass above 1e-14 * ||M||_F.
inline EigenDecomposition eigh(const SymMatrix& m) {
    const std::size_t n = m.dim();
    Matrix a = m.mat();
    Matrix q = Matrix::identity(n);

    const double frob = a.frobenius_norm();
    const double contract = 1e-14 * frob;
    const double floor = 2.0 * std::numeric_limits<double>::epsilon() * frob;

    auto off_frob = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    double off = off_frob();
    int sweep = 0;
    const int max_sweeps = 100;
    while (off > floor && sweep < max_sweeps) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t r = p + 1; r < n; ++r) {
                const double apr = a(p, r);
                if (apr == 0.0) continue;
                const double app = a(p, p), arr = a(r, r);
                // entries that can no longer move the diagonal are flushed
                if (std::abs(apr) <=
                    std::numeric_limits<double>::epsilon() * (std::abs(app) + std::abs(arr))) {
                    a(p, r) = 0.0;
                    a(r, p) = 0.0;
                    continue;
                }
                const double theta = (arr - app) / (2.0 * apr);
                double t;
                if (std::abs(theta) > 1e150)
                    t = 1.0 / (2.0 * theta);
                else
                    t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                a(p, p) = app - t * apr;
                a(r, r) = arr + t * apr;
                a(p, r) = 0.0;
                a(r, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k != p && k != r) {
                        const double akp = a(k, p), akr = a(k, r);
                        a(k, p) = akp - s * (akr + tau * akp);
                        a(p, k) = a(k, p);
                        a(k, r) = akr + s * (akp - tau * akr);
                        a(r, k) = a(k, r);
                    }
                    const double qkp = q(k, p), qkr = q(k, r);
                    q(k, p) = qkp - s * (qkr + tau * qkp);
                    q(k, r) = qkr + s * (qkp - tau * qkr);
                }
                rotated = true;
            }
        }
        off = off_frob();
        ++sweep;
        if (!rotated) break;
    }
    if (off > contract)
        throw NoConvergence("Jacobi eigensolver did not converge in " +
                                std::to_string(max_sweeps) + " sweeps (off-diagonal residual " +
                                std::to_string(off) + ")",
                            off);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

    EigenDecomposition d;
    d.values.resize(n);
    d.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = order[k];
        d.values[k] = a(src, src);
        // sign convention: largest-magnitude component positive
        std::size_t imax = 0;
        double vmax = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = std::abs(q(i, src));
            if (v > vmax) {
                vmax = v;
                imax = i;
            }
        }
        const double sgn = (q(imax, src) < 0.0) ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) d.vectors(i, k) = sgn * q(i, src);
    }
    return d;
}

/// Q f(Lambda) Q^t for a scalar function f applied to the eigenvalues.
template <typename F>
inline SymMatrix spectral_map(const EigenDecomposition& d, F f) {
    const std::size_t n = d.values.size();
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                s += d.vectors(i, k) * f(d.values[k]) * d.vectors(j, k);
            m(i, j) = s;
            m(j, i) = s;
        }
    return SymMatrix(std::move(m));
}

struct InversePair {
    SymMatrix inverse;
    SymMatrix inverse_sqrt;
};

namespace detail {

// One Newton step X <- X + X (I - M X). The residual I - M X is accumulated
// with error-free transforms (FMA TwoProd + TwoSum): its rounding error gets
// amplified by ||X|| ~ cond when forming the correction, and at plain double
// or even 80-bit precision that amplified noise is asymmetric and survives
// the final symmetrization, ruining the step. With a compensated residual
// the step removes the eigensolver's backward-error contribution and leaves
// only the double-storage floor.
inline SymMatrix newton_polish_inverse(const SymMatrix& m, const SymMatrix& x0) {
    const std::size_t n = m.dim();
    std::vector<long double> residual(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double sum = (i == j) ? 1.0 : 0.0;
            double comp = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double prod = -m(i, k) * x0(k, j);
                const double perr = std::fma(-m(i, k), x0(k, j), -prod);
                const double t = sum + prod;
                const double serr =
                    std::abs(sum) >= std::abs(prod) ? (sum - t) + prod : (prod - t) + sum;
                sum = t;
                comp += serr + perr;
            }
            residual[i * n + j] = static_cast<long double>(sum) + static_cast<long double>(comp);
        }
    Matrix polished(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            long double s = x0(i, j);
            for (std::size_t k = 0; k < n; ++k)
                s += static_cast<long double>(x0(i, k)) * residual[k * n + j];
            polished(i, j) = static_cast<double>(s);
        }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 0.5 * (polished(i, j) + polished(j, i));
            polished(i, j) = v;
            polished(j, i) = v;
        }
    return SymMatrix(std::move(polished));
}

}  // namespace detail

/// M^{-1} and M^{-1/2} via the eigendecomposition. `tol` is an absolute
/// eigenvalue threshold; lambda_min <= tol raises SingularMatrix.
inline InversePair inv_and_invsqrt(const SymMatrix& m, double tol) {
    const EigenDecomposition d = eigh(m);
    const double lmin = d.values.empty() ? 0.0 : d.values.front();
    if (lmin <= tol)
        throw SingularMatrix("matrix is singular at tolerance " + std::to_string(tol) +
                                 " (lambda_min " + std::to_string(lmin) + ")",
                             lmin);
    const SymMatrix rough = spectral_map(d, [](double l) { return 1.0 / l; });
    return {detail::newton_polish_inverse(m, rough),
            spectral_map(d, [](double l) { return 1.0 / std::sqrt(l); })};
}

/// Largest singular value, computed as sqrt(lambda_max) of the smaller Gram matrix.
inline double spectral_norm(const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    if (!m.is_finite()) throw Error("spectral_norm requires finite entries");
    const bool wide = m.rows() <= m.cols();
    const std::size_t n = wide ? m.rows() : m.cols();
    Matrix g(n, n);
    if (wide) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < m.cols(); ++k) s += m(i, k) * m(j, k);
                g(i, j) = s;
                g(j, i) = s;
            }
    } else {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < m.rows(); ++k) s += m(k, i) * m(k, j);
                g(i, j) = s;
                g(j, i) = s;
            }
    }
    const EigenDecomposition d = eigh(SymMatrix(std::move(g)));
    return std::sqrt(std::max(0.0, d.values.back()));
}

}  // namespace pframe
