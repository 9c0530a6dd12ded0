#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace usaav {

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("axpy: dimension mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(std::span<double> x, double alpha) {
    for (double& v : x) v *= alpha;
}

// In-place Euclidean normalization. Throws on (near-)zero vectors.
inline void normalize(std::span<double> x) {
    double n = norm2(x);
    if (!(n > 0.0) || !std::isfinite(n))
        throw std::runtime_error("normalize: zero or non-finite vector");
    scale(x, 1.0 / n);
}

inline double clamp_unit(double t) { return t < -1.0 ? -1.0 : (t > 1.0 ? 1.0 : t); }

// Neumaier-compensated accumulator. The n^2 energy sums need better than
// naive accumulation to hold the 1e-12 ceiling-saturation tolerance.
class KahanSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Dense row-major matrix, only used for gauges and coupling tables.
struct Mat {
    int rows = 0;
    int cols = 0;
    Vec a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    // y = A x
    void apply(std::span<const double> x, std::span<double> y) const {
        if (static_cast<int>(x.size()) != cols || static_cast<int>(y.size()) != rows)
            throw std::invalid_argument("Mat::apply: dimension mismatch");
        for (int i = 0; i < rows; ++i) {
            double s = 0.0;
            for (int j = 0; j < cols; ++j) s += (*this)(i, j) * x[j];
            y[i] = s;
        }
    }

    // y = A^T x
    void apply_transpose(std::span<const double> x, std::span<double> y) const {
        if (static_cast<int>(x.size()) != rows || static_cast<int>(y.size()) != cols)
            throw std::invalid_argument("Mat::apply_transpose: dimension mismatch");
        for (int j = 0; j < cols; ++j) y[j] = 0.0;
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) y[j] += (*this)(i, j) * x[i];
    }

    Mat multiply_transposed(const Mat& other) const {  // A * B^T
        if (cols != other.cols) throw std::invalid_argument("multiply_transposed: dimension mismatch");
        Mat out(rows, other.rows);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < other.rows; ++j) {
                double s = 0.0;
                for (int k = 0; k < cols; ++k) s += (*this)(i, k) * other(j, k);
                out(i, j) = s;
            }
        return out;
    }

    // ||A^T A - I||_F
    double orthogonality_residual() const {
        double r = 0.0;
        for (int i = 0; i < cols; ++i)
            for (int j = 0; j < cols; ++j) {
                double s = 0.0;
                for (int k = 0; k < rows; ++k) s += (*this)(k, i) * (*this)(k, j);
                double d = s - (i == j ? 1.0 : 0.0);
                r += d * d;
            }
        return std::sqrt(r);
    }
};

}  // namespace usaav
