#pragma once

#include <vector>

#include "netembed/manifold.hpp"
#include "netembed/netlattice.hpp"

namespace netembed {

/// One simplex of the Kuhn triangulation of the eps-lattice: the convex hull of
/// the vertex path p, p + eps*e_{axes[0]}, p + eps*(e_{axes[0]} + e_{axes[1]}), ...
/// The path visits vertices in increasing lexicographic order, so the path form
/// doubles as the canonical sorted vertex list (asserted in tests); vertex lists
/// handed to the simplex map are nonetheless produced by an explicit sort.
struct KuhnSimplex {
    Eigen::VectorXi anchor;  // integer lattice coordinates of p
    std::vector<int> axes;   // axis insertion order (the permutation)
    double epsilon = 1.0;

    int dimension() const { return static_cast<int>(anchor.size()); }

    /// Integer vertex coordinates in path order.
    std::vector<Eigen::VectorXi> vertex_indices() const;
    /// Chart positions in path order.
    std::vector<Vec> path_vertices() const;
    /// Chart positions sorted lexicographically (the canonical order).
    std::vector<Vec> sorted_vertices() const;

    /// Membership: the coordinates of (x - p)/eps, read along `axes`, are
    /// non-increasing and lie in [0, 1].
    bool contains(const Vec& x, double tol = 1e-12) const;

    bool operator==(const KuhnSimplex& other) const;
};

/// Barycentric coordinates of a chart point within a Kuhn simplex, stored in
/// the sorted-vertex order.
struct BarycentricPoint {
    KuhnSimplex simplex;
    Vec lambda;

    Vec chart_point() const;
};

/// All n! simplices tiling the cube anchored at p.
std::vector<KuhnSimplex> kuhn_simplices(const Eigen::VectorXi& anchor, double epsilon);

/// Locates x in the triangulation. On shared faces, returns the simplex with
/// the lexicographically smallest (anchor, axis order); barycentric entries
/// below 1e-14 are clamped to zero and renormalized.
BarycentricPoint locate(const Vec& x, double epsilon);

/// Ordered vertex subsequence of the sorted list selected by ascending indices.
std::vector<Vec> ordered_face(const KuhnSimplex& s, const std::vector<int>& subset);

/// The (up to two for facets) simplices whose vertex sets contain all of
/// `face_vertices`, sorted by (anchor, axes).
std::vector<KuhnSimplex> simplices_containing_face(const std::vector<Eigen::VectorXi>& face_vertices,
                                                   double epsilon);

}  // namespace netembed
