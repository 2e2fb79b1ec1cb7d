#pragma once

#include <memory>
#include <vector>

#include "netembed/manifold.hpp"
#include "netembed/netlattice.hpp"

namespace netembed {

/// Shared scenario state for direction computations: the metric, the net with
/// its rounding map, and the embedding of net points into the chart.
struct DirectionContext {
    std::shared_ptr<const MetricField> metric;
    std::shared_ptr<const NetRounding> rounding;
    std::shared_ptr<const Embedding> embedding;
};

/// Drifting-sequence schedule: radii m_start * growth^k, truncated at max_terms
/// or at the net's coverage boundary, stopping early once consecutive segment
/// tangents differ by less than tol.
struct DriftParams {
    double m_start = 0.0;  // 0 = auto (8 * max(separation radius, 1), set by the harness)
    double growth = 2.0;
    double tol = 1e-6;
    int max_terms = 12;
};

/// Geodesic from a net point in a global direction: the limit of connecting
/// segments to net points drifting along the direction.
struct GlobalGeodesic {
    Vec base;       // net point p in source coordinates
    Vec direction;  // v on the unit sphere
    Vec tangent;    // unit initial tangent of the limit segment, g-norm 1 at iota(p)

    struct TraceEntry {
        double radius;   // r_m
        Vec drift_point; // p_m = nu(r_m v)
        Vec tangent;     // unit tangent of the segment to p_m
        double gap;      // distance in g to the previous tangent (first entry: NaN)
    };
    std::vector<TraceEntry> trace;
    double final_gap = 0.0;
    bool converged = false;
};

GlobalGeodesic global_geodesic(const DirectionContext& ctx, const Vec& p, const Vec& v,
                               const DriftParams& params);

struct DirectionEntry {
    Vec direction;
    Vec tangent;
    double oddness = 0.0;  // ||w(v) + w(-v)||_g
    double final_gap = 0.0;
    int terms = 0;
};

struct DirectionTable {
    std::vector<DirectionEntry> entries;
    double max_oddness = 0.0;
    double min_separation = 0.0;  // min metric angle between distinct images
    double grid_spacing = 0.0;    // min angle between distinct grid directions
};

/// Tabulates the global-to-local direction map over a symmetric sphere grid:
/// uniform angles for n = 2 (resolution >= 8, even), icosphere vertices for
/// n = 3 (smallest level holding >= resolution points, so >= 42).
DirectionTable local_direction_map(const DirectionContext& ctx, const Vec& p, long resolution,
                                   const DriftParams& params, int threads = 0);

/// Measurable quantities of the two-direction separation argument: the probe
/// distance T = 6 * (2 delta n) / eps_gap, the net witness near gamma(T), the
/// distance bracket, and the drift inner products.
struct InjectivityReport {
    Vec base, u, v;
    double eps_gap = 0.0;     // largest 0.05-multiple below 1 - cos(angle/2) - 0.01
    double delta_tilde = 0.0; // 2 delta n
    double probe_time = 0.0;  // T
    Vec gamma_probe;          // gamma(T) chart point
    bool witness_found = false;
    Vec witness;              // net point q
    double witness_gap = 0.0; // d(q, gamma(T))
    double pq_norm = 0.0;     // |p - q|
    bool bracket_ok = false;  // T - dt < |p - q| < T + dt
    Vec chosen_direction;     // u or v, whichever has the smaller inner product
    double qp_inner = 0.0;    // <(q - p)/|q - p|, chosen>
    std::vector<double> drift_inner;
    bool drift_ok = false;    // inner products < 1 - eps for terms beyond T
};

InjectivityReport injectivity_experiment(const DirectionContext& ctx, const Vec& p, const Vec& u,
                                         const Vec& v, const DriftParams& params);

}  // namespace netembed
