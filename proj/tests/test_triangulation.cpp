#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "netembed/rng.hpp"
#include "netembed/triangulation.hpp"

using namespace netembed;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Eigen::VectorXi iv(std::initializer_list<int> vals) {
    Eigen::VectorXi v(static_cast<int>(vals.size()));
    int i = 0;
    for (int x : vals) v[i++] = x;
    return v;
}

double simplex_volume(const KuhnSimplex& s) {
    auto verts = s.path_vertices();
    int n = s.dimension();
    Mat edges(n, n);
    for (int j = 0; j < n; ++j) edges.col(j) = verts[j + 1] - verts[0];
    double fact = 1.0;
    for (int k = 2; k <= n; ++k) fact *= k;
    return std::abs(edges.determinant()) / fact;
}

}  // namespace

TEST_CASE("kuhn decomposition of the unit square") {
    auto simplices = kuhn_simplices(iv({0, 0}), 1.0);
    REQUIRE(simplices.size() == 2);
    std::set<std::set<std::pair<double, double>>> seen;
    for (const auto& s : simplices) {
        std::set<std::pair<double, double>> vs;
        for (const Vec& v : s.sorted_vertices()) vs.insert({v[0], v[1]});
        seen.insert(vs);
    }
    std::set<std::pair<double, double>> lower = {{0, 0}, {1, 0}, {1, 1}};
    std::set<std::pair<double, double>> upper = {{0, 0}, {0, 1}, {1, 1}};
    CHECK(seen.count(lower) == 1);
    CHECK(seen.count(upper) == 1);
}

TEST_CASE("kuhn simplex counts and volumes") {
    CHECK(kuhn_simplices(iv({0, 0, 0}), 1.0).size() == 6);
    for (double eps : {1.0, 0.5}) {
        for (const auto& s : kuhn_simplices(iv({1, -2}), eps))
            CHECK(simplex_volume(s) == doctest::Approx(eps * eps / 2.0));
        for (const auto& s : kuhn_simplices(iv({0, 3, -1}), eps))
            CHECK(simplex_volume(s) == doctest::Approx(eps * eps * eps / 6.0));
    }
}

TEST_CASE("path order coincides with lexicographic order") {
    SplitMix64 rng(3);
    for (int n : {2, 3}) {
        Eigen::VectorXi anchor(n);
        for (int i = 0; i < n; ++i) anchor[i] = static_cast<int>(rng.next() % 7) - 3;
        for (const auto& s : kuhn_simplices(anchor, 0.5)) {
            auto path = s.path_vertices();
            auto sorted = s.sorted_vertices();
            REQUIRE(path.size() == sorted.size());
            for (std::size_t i = 0; i < path.size(); ++i)
                CHECK((path[i] - sorted[i]).norm() == 0.0);
        }
    }
}

TEST_CASE("locate: interior example") {
    BarycentricPoint bp = locate(v2(0.3, 0.6), 1.0);
    auto verts = bp.simplex.sorted_vertices();
    REQUIRE(verts.size() == 3);
    CHECK((verts[0] - v2(0, 0)).norm() == 0.0);
    CHECK((verts[1] - v2(0, 1)).norm() == 0.0);
    CHECK((verts[2] - v2(1, 1)).norm() == 0.0);
    CHECK(bp.lambda[0] == doctest::Approx(0.4));
    CHECK(bp.lambda[1] == doctest::Approx(0.3));
    CHECK(bp.lambda[2] == doctest::Approx(0.3));
}

TEST_CASE("locate: diagonal tie-break and lattice points") {
    BarycentricPoint diag = locate(v2(0.5, 0.5), 1.0);
    CHECK((diag.simplex.anchor - iv({0, 0})).norm() == 0);
    CHECK(diag.simplex.axes == std::vector<int>{0, 1});

    BarycentricPoint vertex = locate(v2(2, 1), 1.0);
    int ones = 0;
    for (int j = 0; j < vertex.lambda.size(); ++j) {
        if (vertex.lambda[j] == 1.0) ++ones;
        else CHECK(vertex.lambda[j] == 0.0);
    }
    CHECK(ones == 1);
    CHECK((vertex.chart_point() - v2(2, 1)).norm() == 0.0);
}

TEST_CASE("locate partition property") {
    SplitMix64 rng(17);
    for (int n : {2, 3}) {
        for (double eps : {1.0, 0.5}) {
            for (int i = 0; i < 3000; ++i) {
                Vec x(n);
                for (int k = 0; k < n; ++k) x[k] = rng.uniform(-6.0, 6.0);
                BarycentricPoint bp = locate(x, eps);
                CHECK(bp.lambda.minCoeff() >= 0.0);
                CHECK(std::abs(bp.lambda.sum() - 1.0) < 1e-12);
                CHECK(bp.simplex.contains(x));
                CHECK((bp.chart_point() - x).norm() < 1e-12 * std::max(1.0, x.norm()));
            }
        }
    }
}

TEST_CASE("membership test cross-validates against barycentric nonnegativity") {
    SplitMix64 rng(23);
    auto simplices = kuhn_simplices(iv({0, 0, 0}), 1.0);
    for (int i = 0; i < 2000; ++i) {
        Vec x(3);
        for (int k = 0; k < 3; ++k) x[k] = rng.uniform(-0.2, 1.2);
        BarycentricPoint bp = locate(x, 1.0);
        for (const auto& s : simplices) {
            if (!s.contains(x, 1e-9)) continue;
            // a containing simplex reconstructs x with nonnegative coordinates:
            // solve for lambda in the affine system
            auto verts = s.sorted_vertices();
            Mat a(4, 4);
            Vec rhs(4);
            for (int j = 0; j < 4; ++j) {
                a.block(0, j, 3, 1) = verts[j];
                a(3, j) = 1.0;
            }
            rhs.head(3) = x;
            rhs[3] = 1.0;
            Vec lam = a.partialPivLu().solve(rhs);
            CHECK(lam.minCoeff() > -1e-9);
        }
        (void)bp;
    }
}

TEST_CASE("ordered_face examples") {
    KuhnSimplex s;
    s.anchor = iv({0, 0});
    s.axes = {0, 1};  // (0,0) -> (1,0) -> (1,1)
    s.epsilon = 1.0;
    auto face = ordered_face(s, {0, 2});
    REQUIRE(face.size() == 2);
    CHECK((face[0] - v2(0, 0)).norm() == 0.0);
    CHECK((face[1] - v2(1, 1)).norm() == 0.0);

    auto full = ordered_face(s, {0, 1, 2});
    CHECK(full.size() == 3);
    CHECK((full[1] - v2(1, 0)).norm() == 0.0);
}

TEST_CASE("shared faces produce identical ordered sequences from both sides") {
    // the two simplices of the unit square share the main diagonal
    auto simplices = kuhn_simplices(iv({0, 0}), 1.0);
    std::vector<std::vector<Vec>> diag_faces;
    for (const auto& s : simplices) {
        auto verts = s.sorted_vertices();
        // diagonal = {(0,0), (1,1)} = sorted indices {0, 2}
        diag_faces.push_back(ordered_face(s, {0, 2}));
    }
    REQUIRE(diag_faces.size() == 2);
    for (std::size_t i = 0; i < 2; ++i)
        CHECK((diag_faces[0][i] - diag_faces[1][i]).norm() == 0.0);
}

TEST_CASE("face coherence across a block of cubes") {
    SplitMix64 rng(31);
    for (int n : {2, 3}) {
        for (int trial = 0; trial < 120; ++trial) {
            Eigen::VectorXi anchor(n);
            for (int i = 0; i < n; ++i) anchor[i] = static_cast<int>(rng.next() % 3) - 1;
            auto simplices = kuhn_simplices(anchor, 1.0);
            const auto& s = simplices[rng.next() % simplices.size()];
            auto idx = s.vertex_indices();
            int drop = static_cast<int>(rng.next() % idx.size());
            std::vector<Eigen::VectorXi> face;
            for (int j = 0; j < static_cast<int>(idx.size()); ++j)
                if (j != drop) face.push_back(idx[j]);
            auto sharing = simplices_containing_face(face, 1.0);
            // interior facet: exactly two full simplices contain it
            REQUIRE(sharing.size() == 2);
            std::vector<std::vector<Vec>> sequences;
            for (const auto& t : sharing) {
                auto sv = t.sorted_vertices();
                std::vector<int> subset;
                std::set<std::vector<int>> face_keys;
                for (const auto& f : face)
                    face_keys.insert(std::vector<int>(f.data(), f.data() + n));
                auto ti = t.vertex_indices();
                std::vector<Eigen::VectorXi> sorted_idx = ti;  // path == sorted
                for (int j = 0; j < static_cast<int>(sorted_idx.size()); ++j)
                    if (face_keys.count(std::vector<int>(sorted_idx[j].data(),
                                                         sorted_idx[j].data() + n)))
                        subset.push_back(j);
                sequences.push_back(ordered_face(t, subset));
            }
            REQUIRE(sequences[0].size() == sequences[1].size());
            for (std::size_t j = 0; j < sequences[0].size(); ++j)
                CHECK((sequences[0][j] - sequences[1][j]).norm() == 0.0);
        }
    }
}
