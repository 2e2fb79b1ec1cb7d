#pragma once

#include <memory>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "netembed/manifold.hpp"
#include "netembed/netlattice.hpp"
#include "netembed/triangulation.hpp"

namespace netembed {

struct EvaluationError : std::runtime_error {
    EvaluationError(const std::string& msg, std::vector<Eigen::VectorXi> verts)
        : std::runtime_error(msg), vertices(std::move(verts)) {}
    std::vector<Eigen::VectorXi> vertices;
};

struct ChainBoundReport {
    double bound = 0.0;        // sum of consecutive vertex distances
    double max_observed = 0.0; // worst d(image point, first vertex)
    double min_slack = 0.0;    // bound - observed, minimized over samples
    Vec worst_lambda;
    long samples = 0;
};

struct FaceConsistencyReport {
    double max_discrepancy = 0.0;  // chart distance between the two restrictions
    Vec worst_lambda;              // barycentric on the shared face
    long samples = 0;
};

/// Evaluator for the recursive simplex maps. A vertex tuple (u0 < u1 < ... < uk,
/// lattice indices in lexicographic order) and barycentric coordinates lambda
/// produce a manifold point: a single vertex maps to its embedded net rounding,
/// and the recursive step runs the constant-speed connecting geodesic from the
/// first vertex to the face evaluation at rescaled coordinates, stopped at
/// parameter 1 - lambda0.
///
/// Vertex images and consecutive-distance chains are memoized per tuple behind
/// a shared mutex; cached values are immutable and evaluations of identical
/// inputs are bitwise reproducible regardless of cache state.
class SimplexMapEvaluator {
public:
    SimplexMapEvaluator(std::shared_ptr<const MetricField> metric,
                        std::shared_ptr<const NetRounding> rounding,
                        std::shared_ptr<const Embedding> embedding, double epsilon);

    const MetricField& metric() const { return *metric_; }
    const NetRounding& rounding() const { return *rounding_; }
    double epsilon() const { return epsilon_; }

    /// iota(nu(eps * index)), memoized.
    Vec vertex_image(const Eigen::VectorXi& index) const;

    /// Map value at barycentric lambda over the given sorted vertex tuple.
    Vec evaluate(const std::vector<Eigen::VectorXi>& vertices, const Vec& lambda) const;

    Vec evaluate(const BarycentricPoint& bp) const;

    /// Sum of consecutive distances d(u_i, u_{i+1}) along the tuple, memoized.
    double chain_bound(const std::vector<Eigen::VectorXi>& vertices) const;

    /// Checks d(y, u0) <= chain bound over low-discrepancy samples (vertex
    /// indicators first, then interior points).
    ChainBoundReport verify_chain_bound(const std::vector<Eigen::VectorXi>& vertices,
                                        long sample_budget) const;

    /// Samples the shared face of two simplices and compares the three routes:
    /// restriction of either full simplex and the face's own evaluator.
    FaceConsistencyReport verify_face_consistency(const KuhnSimplex& s1, const KuhnSimplex& s2,
                                                  const std::vector<Eigen::VectorXi>& face,
                                                  long sample_budget) const;

private:
    Vec evaluate_span(const Eigen::VectorXi* verts, int count, const Vec& lambda) const;

    std::shared_ptr<const MetricField> metric_;
    std::shared_ptr<const NetRounding> rounding_;
    std::shared_ptr<const Embedding> embedding_;
    double epsilon_;

    struct IntVecHash {
        std::size_t operator()(const std::vector<int>& v) const;
    };
    mutable std::shared_mutex mutex_;
    mutable std::unordered_map<std::vector<int>, Vec, IntVecHash> vertex_cache_;
    mutable std::unordered_map<std::vector<int>, double, IntVecHash> chain_cache_;
};

/// Barycentric low-discrepancy sequence on the k-simplex: sorted Halton points
/// turned into spacings. Deterministic in the sample index.
Vec simplex_sample(int k, long index);

}  // namespace netembed
