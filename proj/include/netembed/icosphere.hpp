#pragma once

#include <array>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace netembed {

/// Subdivided icosahedron on the unit sphere. Faces are consistently oriented
/// outward (positive triple product). The vertex set is exactly closed under
/// negation: the seed icosahedron is centrally symmetric and both edge
/// midpoints and normalization commute with negation bit for bit.
struct Icosphere {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> faces;

    static Icosphere subdivided(int level);

    /// Index of -vertices[i]; exact lookup.
    int antipode(int i) const;

    static int vertex_count(int level) { return 10 * (1 << (2 * level)) + 2; }

private:
    std::unordered_map<std::uint64_t, int> index_;
    void build_index();
};

}  // namespace netembed
