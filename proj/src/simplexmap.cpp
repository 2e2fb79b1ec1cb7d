#include "netembed/simplexmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "netembed/rng.hpp"

namespace netembed {

namespace {

double radical_inverse(int base, long index) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    long i = index;
    while (i > 0) {
        r += f * (i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

constexpr int kHaltonBases[] = {2, 3, 5, 7, 11, 13};

std::vector<int> flatten(const Eigen::VectorXi* verts, int count) {
    std::vector<int> key;
    key.reserve(static_cast<std::size_t>(count) * verts[0].size());
    for (int i = 0; i < count; ++i)
        for (int j = 0; j < verts[i].size(); ++j) key.push_back(verts[i][j]);
    return key;
}

}  // namespace

Vec simplex_sample(int k, long index) {
    Vec lambda(k + 1);
    if (k == 0) {
        lambda[0] = 1.0;
        return lambda;
    }
    std::vector<double> u(k);
    for (int i = 0; i < k; ++i) u[i] = radical_inverse(kHaltonBases[i % 6], index + 1);
    std::sort(u.begin(), u.end());
    lambda[0] = u[0];
    for (int i = 1; i < k; ++i) lambda[i] = u[i] - u[i - 1];
    lambda[k] = 1.0 - u[k - 1];
    return lambda;
}

std::size_t SimplexMapEvaluator::IntVecHash::operator()(const std::vector<int>& v) const {
    std::uint64_t h = 0xcbf29ce484222325ull ^ v.size();
    for (int x : v) h = hash_mix(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(x)));
    return static_cast<std::size_t>(h);
}

SimplexMapEvaluator::SimplexMapEvaluator(std::shared_ptr<const MetricField> metric,
                                         std::shared_ptr<const NetRounding> rounding,
                                         std::shared_ptr<const Embedding> embedding,
                                         double epsilon)
    : metric_(std::move(metric)),
      rounding_(std::move(rounding)),
      embedding_(std::move(embedding)),
      epsilon_(epsilon) {
    if (!(epsilon_ > 0)) throw ConfigError("simplex map: lattice epsilon must be positive");
}

Vec SimplexMapEvaluator::vertex_image(const Eigen::VectorXi& index) const {
    std::vector<int> key(index.data(), index.data() + index.size());
    {
        std::shared_lock lock(mutex_);
        auto it = vertex_cache_.find(key);
        if (it != vertex_cache_.end()) return it->second;
    }
    Vec p(index.size());
    for (int i = 0; i < index.size(); ++i) p[i] = epsilon_ * index[i];
    Vec image = (*embedding_)((*rounding_)(p));
    std::unique_lock lock(mutex_);
    auto [it, inserted] = vertex_cache_.emplace(std::move(key), std::move(image));
    return it->second;
}

Vec SimplexMapEvaluator::evaluate_span(const Eigen::VectorXi* verts, int count,
                                       const Vec& lambda) const {
    const int k = count - 1;
    if (lambda.size() != count)
        throw std::invalid_argument("simplex map: barycentric length does not match vertex count");
    double l0 = lambda[0];
    if (k == 0 || l0 > 1.0 - 1e-12) return vertex_image(verts[0]);

    double rest = 1.0 - l0;
    Vec theta = lambda.tail(k) / rest;
    Vec y = evaluate_span(verts + 1, k, theta);
    if (l0 == 0.0) return y;  // exactly the face value, no geodesic needed

    Vec a = vertex_image(verts[0]);
    double scale = std::max({1.0, a.lpNorm<Eigen::Infinity>(), y.lpNorm<Eigen::Infinity>()});
    if ((a - y).lpNorm<Eigen::Infinity>() < 1e-13 * scale) return a;  // constant path

    try {
        GeodesicPath path = geodesic_bvp(*metric_, a, y);
        return geodesic_ivp(*metric_, a, path.initial_velocity(), rest).endpoint();
    } catch (const BvpError& e) {
        throw EvaluationError(std::string("simplex map evaluation failed: ") + e.what(),
                              std::vector<Eigen::VectorXi>(verts, verts + count));
    }
}

Vec SimplexMapEvaluator::evaluate(const std::vector<Eigen::VectorXi>& vertices,
                                  const Vec& lambda) const {
    if (vertices.empty()) throw std::invalid_argument("simplex map: empty vertex tuple");
    return evaluate_span(vertices.data(), static_cast<int>(vertices.size()), lambda);
}

Vec SimplexMapEvaluator::evaluate(const BarycentricPoint& bp) const {
    return evaluate(bp.simplex.vertex_indices(), bp.lambda);
}

double SimplexMapEvaluator::chain_bound(const std::vector<Eigen::VectorXi>& vertices) const {
    std::vector<int> key = flatten(vertices.data(), static_cast<int>(vertices.size()));
    {
        std::shared_lock lock(mutex_);
        auto it = chain_cache_.find(key);
        if (it != chain_cache_.end()) return it->second;
    }
    double bound = 0.0;
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i)
        bound += distance(*metric_, vertex_image(vertices[i]), vertex_image(vertices[i + 1]));
    std::unique_lock lock(mutex_);
    auto [it, inserted] = chain_cache_.emplace(std::move(key), bound);
    return it->second;
}

ChainBoundReport SimplexMapEvaluator::verify_chain_bound(
    const std::vector<Eigen::VectorXi>& vertices, long sample_budget) const {
    if (sample_budget < 1) throw std::invalid_argument("chain bound: sample budget must be >= 1");
    const int k = static_cast<int>(vertices.size()) - 1;
    ChainBoundReport report;
    report.bound = chain_bound(vertices);
    Vec u0 = vertex_image(vertices[0]);
    report.min_slack = std::numeric_limits<double>::infinity();

    auto consider = [&](const Vec& lambda) {
        Vec y = evaluate(vertices, lambda);
        double observed = distance(*metric_, y, u0);
        double slack = report.bound - observed;
        if (observed > report.max_observed) report.max_observed = observed;
        if (slack < report.min_slack) {
            report.min_slack = slack;
            report.worst_lambda = lambda;
        }
        ++report.samples;
    };

    // vertex indicators first: they include the far endpoint where slack can hit zero
    for (int j = 0; j <= k; ++j) {
        Vec lambda = Vec::Zero(k + 1);
        lambda[j] = 1.0;
        consider(lambda);
    }
    for (long s = 0; s < sample_budget; ++s) consider(simplex_sample(k, s));
    return report;
}

FaceConsistencyReport SimplexMapEvaluator::verify_face_consistency(
    const KuhnSimplex& s1, const KuhnSimplex& s2, const std::vector<Eigen::VectorXi>& face,
    long sample_budget) const {
    auto embed_indices = [&](const KuhnSimplex& s) {
        // position of each face vertex within the simplex's sorted vertex list
        auto verts = s.vertex_indices();
        std::vector<int> pos;
        for (const auto& f : face) {
            int found = -1;
            for (int j = 0; j < static_cast<int>(verts.size()); ++j)
                if ((verts[j].array() == f.array()).all()) {
                    found = j;
                    break;
                }
            if (found < 0)
                throw std::invalid_argument("face consistency: face is not shared by both simplices");
            pos.push_back(found);
        }
        return pos;
    };
    std::vector<int> pos1 = embed_indices(s1);
    std::vector<int> pos2 = embed_indices(s2);
    auto verts1 = s1.vertex_indices();
    auto verts2 = s2.vertex_indices();
    const int m = static_cast<int>(face.size()) - 1;

    FaceConsistencyReport report;
    auto consider = [&](const Vec& mu) {
        Vec l1 = Vec::Zero(verts1.size());
        Vec l2 = Vec::Zero(verts2.size());
        for (int j = 0; j <= m; ++j) {
            l1[pos1[j]] = mu[j];
            l2[pos2[j]] = mu[j];
        }
        Vec a = evaluate(verts1, l1);
        Vec b = evaluate(verts2, l2);
        Vec c = evaluate(face, mu);
        double disc = std::max({(a - b).norm(), (a - c).norm(), (b - c).norm()});
        if (disc > report.max_discrepancy) {
            report.max_discrepancy = disc;
            report.worst_lambda = mu;
        }
        ++report.samples;
    };

    for (int j = 0; j <= m; ++j) {
        Vec mu = Vec::Zero(m + 1);
        mu[j] = 1.0;
        consider(mu);
    }
    for (long s = 0; s < sample_budget; ++s) consider(simplex_sample(m, s));
    return report;
}

}  // namespace netembed
