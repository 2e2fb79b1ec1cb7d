#pragma once

#include <functional>
#include <memory>

#include "netembed/icosphere.hpp"
#include "netembed/simplexmap.hpp"

namespace netembed {

struct ResolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegeneracyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RoundPreservingReport {
    Eigen::VectorXi anchor;
    double bound = 0.0;     // n * (eps + 2 * max vertex rounding gap)
    double observed = 0.0;  // d(Phi(x), embedded rounding of the anchor)
    double slack = 0.0;
};

struct OriginBoundReport {
    double norm_x = 0.0;
    double origin_distance = 0.0;  // d(Phi(x), o)
    double slack = 0.0;            // origin_distance + offset_radius - |x|
};

struct AntipodalSample {
    Vec direction;
    double angle = 0.0;           // metric angle between the two radial projections
    double radial_gap = 0.0;      // |d(o, Phi(x)) - d(o, Phi(-x))|
    double image_distance = 0.0;  // d(Phi(x), Phi(-x))
};

struct AntipodalReport {
    double radius = 0.0;
    double min_angle = 0.0;
    double min_distance_margin = 0.0;  // min(image_distance - radial_gap)
    bool below_separation_radius = false;
    long samples = 0;
    std::vector<AntipodalSample> details;
};

struct DegreeReport {
    double radius = 0.0;
    long resolution = 0;  // loop samples (n = 2) or icosphere level (n = 3)
    int degree = 0;
    double min_antipodal_gap = 0.0;
    long samples = 0;
    bool below_separation_radius = false;
};

struct PreimageReport {
    bool found = false;
    Vec preimage;
    double residual = 0.0;
    long attempts = 0;
};

/// Degree of a circle self-map sampled along a uniform loop, with adaptive
/// bisection wherever consecutive images step by more than pi/4.
int circle_degree(const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& f,
                  long resolution, int threads, double* min_antipodal_gap = nullptr,
                  long* samples_used = nullptr);

/// Degree of a sphere self-map through a subdivided icosahedron: signed count
/// of image triangles covering a regular direction (margin 1e-3, up to 16
/// redraws).
int sphere_degree(const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& f, int level,
                  std::uint64_t seed, int threads, double* min_antipodal_gap = nullptr,
                  long* samples_used = nullptr);

/// The map assembled from simplex maps over the Kuhn triangulation, together
/// with its quantitative verifiers.
class GluedMap {
public:
    GluedMap(std::shared_ptr<const SimplexMapEvaluator> evaluator);

    int dimension() const { return n_; }
    double epsilon() const { return evaluator_->epsilon(); }
    double delta() const;
    const SimplexMapEvaluator& evaluator() const { return *evaluator_; }

    /// (eps + 2 delta) n + 3 eps sqrt(n)/2 + 4 delta
    double offset_radius() const;
    /// 2 (eps + 2 delta) n + 5 eps sqrt(n)/2 + 7 delta
    double separation_radius() const;

    Vec operator()(const Vec& x) const;
    const Vec& origin_image() const { return origin_image_; }

    RoundPreservingReport verify_round_preserving(const Vec& x) const;
    OriginBoundReport verify_origin_bound(const Vec& x) const;

    /// Radial projection at the basepoint and its identification with the
    /// Euclidean unit sphere through g(o)^{1/2}.
    TangentVector radial(const Vec& chart_point) const;
    Vec sphere_coords(const TangentVector& w) const;

    AntipodalReport antipodal_check(double radius, long pairs, int threads = 0,
                                    bool keep_details = false) const;
    DegreeReport degree(double radius, long resolution, std::uint64_t seed = 0,
                        int threads = 0) const;

    /// Multistart damped least squares for a preimage of y; evidence only.
    PreimageReport find_preimage(const Vec& y, long simplex_budget = 64) const;

private:
    std::shared_ptr<const SimplexMapEvaluator> evaluator_;
    int n_;
    Vec origin_image_;
    Mat sphere_identification_;  // g(o)^{1/2}
};

}  // namespace netembed
