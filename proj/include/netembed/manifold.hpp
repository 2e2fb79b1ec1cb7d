#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace netembed {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Tangent vector attached to a chart point.
struct TangentVector {
    Vec base;
    Vec components;
};

enum class MetricFamily { Flat, LinearPullback, SinePullback, Conformal };

std::string family_name(MetricFamily f);

/// Complete Riemannian metric on the global chart R^n.
///
/// Families:
///   flat             g = I
///   linear-pullback  g = A^T A for an invertible matrix A
///   sine-pullback    g = Dphi^T Dphi, phi_i(x) = x_i + a_i sin(w_i x_{i+1 mod n})
///   conformal        g = exp(2 c.x) I  (no flat pullback; negative-test family)
///
/// The two pullback families carry an exact oracle: phi is a global isometry
/// onto flat R^n, so distances are |phi(x) - phi(y)| and geodesics are
/// phi-preimages of straight segments. The oracle is exposed for verification
/// and for constructing isometric net embeddings; the geodesic solvers below
/// never consult it.
class MetricField {
public:
    static MetricField flat(int n);
    static MetricField linear_pullback(const Mat& a);
    static MetricField sine_pullback(const Vec& amplitudes, const Vec& frequencies);
    static MetricField conformal(const Vec& coeffs);

    int dimension() const { return n_; }
    MetricFamily family() const { return family_; }
    bool has_pullback() const { return family_ != MetricFamily::Conformal; }

    Mat metric(const Vec& x) const;
    std::vector<Mat> metric_derivative(const Vec& x) const;  // [k] = d g / d x_k
    std::vector<Mat> christoffel(const Vec& x) const;        // [k](i,j) = Gamma^k_ij

    /// accel_k = -Gamma^k_ij v_i v_j, written without temporaries for the integrator.
    void geodesic_acceleration(const Vec& x, const Vec& v, Vec& accel) const;

    double metric_norm(const Vec& x, const Vec& v) const;
    double metric_dot(const Vec& x, const Vec& v, const Vec& w) const;

    // pullback oracle
    Vec pullback(const Vec& x) const;
    Vec pullback_inverse(const Vec& y) const;
    Mat pullback_jacobian(const Vec& x) const;
    double oracle_distance(const Vec& x, const Vec& y) const;

    /// Bounds on singular values of Dphi, used for chart-vs-metric pruning radii.
    /// For the conformal family these are sampled estimates with a 2x safety factor.
    double chart_ratio_lower() const;
    double chart_ratio_upper() const;

    const Mat& linear_matrix() const { return matrix_; }
    const Vec& amplitudes() const { return amplitudes_; }
    const Vec& frequencies() const { return frequencies_; }
    const Vec& conformal_coefficients() const { return coeffs_; }

    /// Test hook: compute metric derivatives by central differences (h = 1e-5)
    /// instead of the family's analytic formulas.
    bool finite_difference_derivatives = false;

private:
    MetricField(MetricFamily f, int n) : family_(f), n_(n) {}

    void check_point(const Vec& x) const;

    MetricFamily family_;
    int n_;
    Mat matrix_;       // linear pullback A
    Mat matrix_inv_;   // A^{-1}
    Vec amplitudes_;   // sine pullback a
    Vec frequencies_;  // sine pullback w
    Vec coeffs_;       // conformal c
};

struct GeodesicSample {
    double t;
    Vec position;
    Vec velocity;
};

/// Constant-speed geodesic with dense integrator output.
struct GeodesicPath {
    std::vector<GeodesicSample> samples;
    double duration = 0.0;
    double speed = 0.0;  // metric speed, constant along the path
    bool minimizing = false;

    const Vec& start() const { return samples.front().position; }
    const Vec& endpoint() const { return samples.back().position; }
    const Vec& initial_velocity() const { return samples.front().velocity; }
    double length() const { return speed * duration; }

    /// Cubic Hermite interpolation between stored samples. Fine for plots and
    /// smoke tests; solver-grade queries should re-integrate instead.
    Vec at(double t) const;
};

struct IntegrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BvpError : std::runtime_error {
    BvpError(const std::string& msg, double residual)
        : std::runtime_error(msg), last_residual(residual) {}
    double last_residual;
};

/// Integrate the geodesic equation from x with initial velocity v over [0, t_max].
/// Adaptive Dormand-Prince 5(4), local tolerance 1e-10; the metric speed along
/// the returned path is conserved to 1e-7 relative.
GeodesicPath geodesic_ivp(const MetricField& m, const Vec& x, const Vec& v, double t_max);

/// Connecting geodesic gamma: [0,1] -> M with gamma(0) = x, gamma(1) = y.
/// Single shooting with damped Newton on the endpoint residual (< 1e-9 in chart
/// coordinates), straight-line initial guess, up to 8 randomized restarts.
GeodesicPath geodesic_bvp(const MetricField& m, const Vec& x, const Vec& y);

/// Riemannian distance, the length of the connecting geodesic.
double distance(const MetricField& m, const Vec& x, const Vec& y);

/// Unit initial direction at `origin` of the connecting geodesic to x.
TangentVector radial_projection(const MetricField& m, const Vec& origin, const Vec& x);

}  // namespace netembed
