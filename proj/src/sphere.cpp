#include "usaav/sphere.hpp"

#include <cmath>
#include <stdexcept>

namespace usaav {

UnitVector::UnitVector(Vec coords) : coords_(std::move(coords)) {
    if (coords_.size() < 2) throw std::invalid_argument("UnitVector: d >= 2 required");
    normalize(coords_);
}

UnitVector UnitVector::basis(int d, int axis) {
    if (axis < 0 || axis >= d) throw std::invalid_argument("UnitVector::basis: axis out of range");
    Vec v(d, 0.0);
    v[axis] = 1.0;
    return UnitVector(std::move(v));
}

PlanarRotation::PlanarRotation(int axis_a, int axis_b, double angle)
    : axis_a_(axis_a), axis_b_(axis_b), angle_(angle) {
    if (axis_a == axis_b) throw std::invalid_argument("PlanarRotation: axes must differ");
    if (axis_a < 0 || axis_b < 0) throw std::invalid_argument("PlanarRotation: negative axis");
}

PlanarRotation::PlanarRotation(Vec span_p, Vec span_q, double angle) : angle_(angle) {
    if (span_p.size() != span_q.size())
        throw std::invalid_argument("PlanarRotation: span vectors must share dimension");
    normalize(span_p);
    // Gram-Schmidt the second spanning vector against the first.
    double c = dot(span_q, span_p);
    axpy(-c, span_p, span_q);
    double n = norm2(span_q);
    if (n < 1e-12) throw std::invalid_argument("PlanarRotation: span vectors are collinear");
    scale(span_q, 1.0 / n);
    p_ = std::move(span_p);
    q_ = std::move(span_q);
}

PlanarRotation PlanarRotation::with_angle(double angle) const {
    PlanarRotation r = *this;
    r.angle_ = angle;
    return r;
}

void PlanarRotation::apply_inplace(std::span<double> x) const {
    apply_inplace(x, std::cos(angle_), std::sin(angle_));
}

void PlanarRotation::apply_inplace(std::span<double> x, double c, double s) const {
    if (!p_) {
        int d = static_cast<int>(x.size());
        if (axis_a_ >= d || axis_b_ >= d)
            throw std::invalid_argument("PlanarRotation: axis index >= dimension");
        double xa = x[axis_a_], xb = x[axis_b_];
        x[axis_a_] = c * xa - s * xb;
        x[axis_b_] = s * xa + c * xb;
        return;
    }
    const Vec& p = *p_;
    const Vec& q = *q_;
    if (x.size() != p.size()) throw std::invalid_argument("PlanarRotation: dimension mismatch");
    double xp = dot(x, p), xq = dot(x, q);
    // x + (c-1)(xp p + xq q) + s (xp q - xq p)
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] += (c - 1.0) * (xp * p[i] + xq * q[i]) + s * (xp * q[i] - xq * p[i]);
}

Vec PlanarRotation::apply(std::span<const double> x) const {
    Vec out(x.begin(), x.end());
    apply_inplace(out);
    return out;
}

UnitVector apply_rotation(const PlanarRotation& r, const UnitVector& x) {
    return UnitVector(r.apply(x.span()));
}

OrthogonalGauge::OrthogonalGauge(Mat m) : matrix_(std::move(m)) {
    if (matrix_.rows != matrix_.cols || matrix_.rows < 2)
        throw std::invalid_argument("OrthogonalGauge: square matrix with d >= 2 required");
    if (matrix_.orthogonality_residual() > 1e-10)
        throw std::invalid_argument("OrthogonalGauge: matrix is not orthogonal");
}

Vec OrthogonalGauge::apply(std::span<const double> x) const {
    Vec y(matrix_.rows);
    matrix_.apply(x, y);
    return y;
}

Vec OrthogonalGauge::apply_transpose(std::span<const double> x) const {
    Vec y(matrix_.cols);
    matrix_.apply_transpose(x, y);
    return y;
}

OrthogonalGauge OrthogonalGauge::identity(int d) { return OrthogonalGauge(Mat::identity(d)); }

OrthogonalGauge OrthogonalGauge::from_rotation(const PlanarRotation& r, int d) {
    Mat m(d, d);
    Vec col(d);
    for (int j = 0; j < d; ++j) {
        std::fill(col.begin(), col.end(), 0.0);
        col[j] = 1.0;
        r.apply_inplace(col);
        for (int i = 0; i < d; ++i) m(i, j) = col[i];
    }
    return OrthogonalGauge(std::move(m));
}

Vec project_tangent(const UnitVector& x, std::span<const double> v) {
    if (static_cast<int>(v.size()) != x.dim())
        throw std::invalid_argument("project_tangent: dimension mismatch");
    Vec out(v.begin(), v.end());
    project_tangent_inplace(x.span(), out);
    return out;
}

void project_tangent_inplace(std::span<const double> x, std::span<double> v) {
    double c = dot(x, v);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * x[i];
}

OrthogonalGauge householder_gauge(const UnitVector& u, const UnitVector& g) {
    if (u.dim() != g.dim()) throw std::invalid_argument("householder_gauge: dimension mismatch");
    int d = u.dim();
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = u[i] + g[i];
    double n = norm2(v);
    Mat m(d, d);
    if (n < 1e-8) {
        // g = -u: the reflection degenerates, use -I.
        for (int i = 0; i < d; ++i) m(i, i) = -1.0;
        return OrthogonalGauge(std::move(m));
    }
    scale(v, 1.0 / n);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = 2.0 * v[i] * v[j] - (i == j ? 1.0 : 0.0);
    return OrthogonalGauge(std::move(m));
}

double geodesic_angle(std::span<const double> x, std::span<const double> y) {
    return std::acos(clamp_unit(dot(x, y)));
}

double geodesic_angle(const UnitVector& x, const UnitVector& y) {
    if (x.dim() != y.dim()) throw std::invalid_argument("geodesic_angle: dimension mismatch");
    return geodesic_angle(x.span(), y.span());
}

}  // namespace usaav
