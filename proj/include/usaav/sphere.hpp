#pragma once

#include <optional>
#include <span>

#include "usaav/linalg.hpp"

namespace usaav {

// Point on S^{d-1}. Coordinates are renormalized on construction; d >= 2.
class UnitVector {
public:
    explicit UnitVector(Vec coords);

    int dim() const { return static_cast<int>(coords_.size()); }
    const Vec& coords() const { return coords_; }
    double operator[](int i) const { return coords_[i]; }
    std::span<const double> span() const { return coords_; }

    static UnitVector basis(int d, int axis);

private:
    Vec coords_;
};

// Rotation by `angle` on a two-dimensional subspace, identity on its
// orthogonal complement. Default: the coordinate plane span{e_a, e_b}.
// A general plane may be given by two orthonormal spanning vectors.
class PlanarRotation {
public:
    PlanarRotation(int axis_a, int axis_b, double angle);
    PlanarRotation(Vec span_p, Vec span_q, double angle);  // general plane

    PlanarRotation with_angle(double angle) const;
    double angle() const { return angle_; }
    bool coordinate_plane() const { return !p_.has_value(); }
    int axis_a() const { return axis_a_; }
    int axis_b() const { return axis_b_; }

    // In-place rotation of an ambient vector (need not be unit).
    void apply_inplace(std::span<double> x) const;
    void apply_inplace(std::span<double> x, double cos_t, double sin_t) const;
    Vec apply(std::span<const double> x) const;

private:
    int axis_a_ = 0;
    int axis_b_ = 1;
    double angle_ = 0.0;
    std::optional<Vec> p_, q_;  // general-plane orthonormal span
};

UnitVector apply_rotation(const PlanarRotation& r, const UnitVector& x);

// Orthogonal d x d matrix; construction checks ||Psi^T Psi - I||_F <= 1e-10.
class OrthogonalGauge {
public:
    explicit OrthogonalGauge(Mat m);

    int dim() const { return matrix_.rows; }
    const Mat& matrix() const { return matrix_; }
    Vec apply(std::span<const double> x) const;
    Vec apply_transpose(std::span<const double> x) const;

    static OrthogonalGauge identity(int d);
    static OrthogonalGauge from_rotation(const PlanarRotation& r, int d);

private:
    Mat matrix_;
};

// v - <x,v> x
Vec project_tangent(const UnitVector& x, std::span<const double> v);
void project_tangent_inplace(std::span<const double> x, std::span<double> v);

// Reflection gauge sending u to g: Psi = 2vv^T - I with v = (u+g)/||u+g||,
// and Psi = -I when g = -u.
OrthogonalGauge householder_gauge(const UnitVector& u, const UnitVector& g);

// arccos of the clamped inner product, in [0, pi].
double geodesic_angle(const UnitVector& x, const UnitVector& y);
double geodesic_angle(std::span<const double> x, std::span<const double> y);

}  // namespace usaav
