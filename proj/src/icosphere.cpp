#include "netembed/icosphere.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <stdexcept>

#include "netembed/rng.hpp"

namespace netembed {

namespace {

std::uint64_t vertex_key(const Eigen::Vector3d& v) {
    std::uint64_t h = 0x2545f4914f6cdd1dull;
    for (int i = 0; i < 3; ++i) {
        double c = v[i] + 0.0;  // fold -0.0 into +0.0
        std::uint64_t bits;
        std::memcpy(&bits, &c, 8);
        h = hash_mix(h, bits);
    }
    return h;
}

}  // namespace

Icosphere Icosphere::subdivided(int level) {
    if (level < 0 || level > 8) throw std::invalid_argument("icosphere level out of range");
    Icosphere ico;
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    auto add = [&](double a, double b, double c) {
        Eigen::Vector3d v(a, b, c);
        ico.vertices.push_back(v.normalized());
    };
    add(-1, t, 0); add(1, t, 0); add(-1, -t, 0); add(1, -t, 0);
    add(0, -1, t); add(0, 1, t); add(0, -1, -t); add(0, 1, -t);
    add(t, 0, -1); add(t, 0, 1); add(-t, 0, -1); add(-t, 0, 1);
    ico.faces = {{0, 11, 5},  {0, 5, 1},   {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                 {1, 5, 9},   {5, 11, 4},  {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                 {3, 9, 4},   {3, 4, 2},   {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                 {4, 9, 5},   {2, 4, 11},  {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

    for (int pass = 0; pass < level; ++pass) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Eigen::Vector3d m = (ico.vertices[key.first] + ico.vertices[key.second]).normalized();
            int idx = static_cast<int>(ico.vertices.size());
            ico.vertices.push_back(m);
            midpoint[key] = idx;
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(ico.faces.size() * 4);
        for (const auto& f : ico.faces) {
            int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        ico.faces = std::move(next);
    }

    // enforce outward orientation (positive triple product on a star-shaped mesh)
    for (auto& f : ico.faces) {
        const auto& a = ico.vertices[f[0]];
        const auto& b = ico.vertices[f[1]];
        const auto& c = ico.vertices[f[2]];
        if (a.dot(b.cross(c)) < 0) std::swap(f[1], f[2]);
    }
    ico.build_index();
    return ico;
}

void Icosphere::build_index() {
    index_.clear();
    for (int i = 0; i < static_cast<int>(vertices.size()); ++i) index_[vertex_key(vertices[i])] = i;
}

int Icosphere::antipode(int i) const {
    Eigen::Vector3d neg = -vertices[i];
    auto it = index_.find(vertex_key(neg));
    if (it == index_.end())
        throw std::logic_error("icosphere vertex set is not centrally symmetric");
    return it->second;
}

}  // namespace netembed
