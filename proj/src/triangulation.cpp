#include "netembed/triangulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace netembed {

namespace {

bool lex_less_vec(const Vec& a, const Vec& b) {
    for (int i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return false;
}

bool lex_less_int(const Eigen::VectorXi& a, const Eigen::VectorXi& b) {
    for (int i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return false;
}

}  // namespace

std::vector<Eigen::VectorXi> KuhnSimplex::vertex_indices() const {
    std::vector<Eigen::VectorXi> out;
    out.reserve(dimension() + 1);
    Eigen::VectorXi v = anchor;
    out.push_back(v);
    for (int axis : axes) {
        v[axis] += 1;
        out.push_back(v);
    }
    return out;
}

std::vector<Vec> KuhnSimplex::path_vertices() const {
    std::vector<Vec> out;
    for (const auto& idx : vertex_indices()) {
        Vec p(idx.size());
        for (int i = 0; i < idx.size(); ++i) p[i] = epsilon * idx[i];
        out.push_back(p);
    }
    return out;
}

std::vector<Vec> KuhnSimplex::sorted_vertices() const {
    std::vector<Vec> out = path_vertices();
    std::sort(out.begin(), out.end(), lex_less_vec);
    return out;
}

bool KuhnSimplex::contains(const Vec& x, double tol) const {
    const int n = dimension();
    Vec f(n);
    for (int i = 0; i < n; ++i) f[i] = (x[i] - epsilon * anchor[i]) / epsilon;
    double prev = 1.0 + tol;
    for (int k = 0; k < n; ++k) {
        double fk = f[axes[k]];
        if (fk < -tol || fk > prev + tol) return false;
        prev = fk;
    }
    return prev >= -tol;
}

bool KuhnSimplex::operator==(const KuhnSimplex& other) const {
    return epsilon == other.epsilon && anchor.size() == other.anchor.size() &&
           (anchor.array() == other.anchor.array()).all() && axes == other.axes;
}

Vec BarycentricPoint::chart_point() const {
    auto verts = simplex.sorted_vertices();
    Vec x = Vec::Zero(simplex.dimension());
    for (std::size_t j = 0; j < verts.size(); ++j) x += lambda[j] * verts[j];
    return x;
}

std::vector<KuhnSimplex> kuhn_simplices(const Eigen::VectorXi& anchor, double epsilon) {
    const int n = static_cast<int>(anchor.size());
    std::vector<int> axes(n);
    std::iota(axes.begin(), axes.end(), 0);
    std::vector<KuhnSimplex> out;
    do {
        KuhnSimplex s;
        s.anchor = anchor;
        s.axes = axes;
        s.epsilon = epsilon;
        out.push_back(std::move(s));
    } while (std::next_permutation(axes.begin(), axes.end()));
    return out;
}

BarycentricPoint locate(const Vec& x, double epsilon) {
    const int n = static_cast<int>(x.size());
    KuhnSimplex s;
    s.anchor.resize(n);
    s.epsilon = epsilon;
    Vec f(n);
    for (int i = 0; i < n; ++i) {
        double t = x[i] / epsilon;
        double k = std::floor(t);
        double frac = t - k;
        if (frac == 0.0) {
            // lower-boundary point: the anchor one cube down is lexicographically
            // smaller and still contains x (with fractional coordinate 1)
            k -= 1.0;
            frac = 1.0;
        }
        s.anchor[i] = static_cast<int>(k);
        f[i] = frac;
    }
    // stable non-increasing sort; equal coordinates keep ascending axis order,
    // which makes the axis sequence lexicographically smallest
    std::vector<int> axes(n);
    std::iota(axes.begin(), axes.end(), 0);
    std::stable_sort(axes.begin(), axes.end(), [&](int a, int b) { return f[a] > f[b]; });
    s.axes = axes;

    Vec lambda(n + 1);
    lambda[0] = 1.0 - f[axes[0]];
    for (int k = 1; k < n; ++k) lambda[k] = f[axes[k - 1]] - f[axes[k]];
    lambda[n] = f[axes[n - 1]];

    // clamp droplets so the lambda0 = 1 branch stays exactly reachable
    double sum = 0.0;
    for (int j = 0; j <= n; ++j) {
        if (lambda[j] < 1e-14) lambda[j] = 0.0;
        sum += lambda[j];
    }
    lambda /= sum;

    return {std::move(s), std::move(lambda)};
}

std::vector<Vec> ordered_face(const KuhnSimplex& s, const std::vector<int>& subset) {
    if (subset.empty()) throw std::invalid_argument("ordered_face: empty index subset");
    auto verts = s.sorted_vertices();
    std::vector<int> idx = subset;
    std::sort(idx.begin(), idx.end());
    std::vector<Vec> out;
    for (int j : idx) {
        if (j < 0 || j > s.dimension()) throw std::invalid_argument("ordered_face: index out of range");
        out.push_back(verts[j]);
    }
    return out;
}

std::vector<KuhnSimplex> simplices_containing_face(
    const std::vector<Eigen::VectorXi>& face_vertices, double epsilon) {
    if (face_vertices.empty()) return {};
    const int n = static_cast<int>(face_vertices[0].size());
    Eigen::VectorXi lo = face_vertices[0];
    for (const auto& v : face_vertices) lo = lo.cwiseMin(v);

    std::set<std::vector<int>> face_set;
    for (const auto& v : face_vertices)
        face_set.insert(std::vector<int>(v.data(), v.data() + n));

    std::vector<KuhnSimplex> out;
    // candidate anchors: every vertex of the face could sit anywhere along a
    // simplex path, so anchors lie within one cube below the face minimum
    Eigen::VectorXi offset = Eigen::VectorXi::Zero(n);
    while (true) {
        Eigen::VectorXi anchor = lo - offset;
        for (KuhnSimplex& s : kuhn_simplices(anchor, epsilon)) {
            std::set<std::vector<int>> verts;
            for (const auto& v : s.vertex_indices())
                verts.insert(std::vector<int>(v.data(), v.data() + n));
            bool all = true;
            for (const auto& fv : face_set)
                if (!verts.count(fv)) {
                    all = false;
                    break;
                }
            if (all) out.push_back(s);
        }
        int axis = 0;
        while (axis < n) {
            if (++offset[axis] <= 1) break;
            offset[axis] = 0;
            ++axis;
        }
        if (axis == n) break;
    }
    std::sort(out.begin(), out.end(), [](const KuhnSimplex& a, const KuhnSimplex& b) {
        if (lex_less_int(a.anchor, b.anchor)) return true;
        if (lex_less_int(b.anchor, a.anchor)) return false;
        return a.axes < b.axes;
    });
    return out;
}

}  // namespace netembed
