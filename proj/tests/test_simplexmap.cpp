#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <thread>

#include "netembed/rng.hpp"
#include "netembed/simplexmap.hpp"

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

Vec bary(std::initializer_list<double> vals) {
    Vec v(static_cast<int>(vals.size()));
    int i = 0;
    for (double x : vals) v[i++] = x;
    return v;
}

struct Setup {
    std::shared_ptr<MetricField> metric;
    std::shared_ptr<Net> net;
    std::shared_ptr<NetRounding> rounding;
    std::shared_ptr<Embedding> embedding;
    std::shared_ptr<SimplexMapEvaluator> eval;
};

Setup make_setup(MetricField m, double radius = 8.0, double delta = 0.75) {
    Setup s;
    s.metric = std::make_shared<MetricField>(std::move(m));
    int n = s.metric->dimension();
    s.net = std::make_shared<Net>(
        Net::generate(n, 1.0, delta, 0.0, 1, Box::centered(n, radius)));
    s.rounding = std::make_shared<NetRounding>(s.net);
    s.embedding = std::make_shared<Embedding>(
        s.metric->has_pullback() ? Embedding::pullback(s.metric) : Embedding::identity());
    s.eval = std::make_shared<SimplexMapEvaluator>(s.metric, s.rounding, s.embedding, 1.0);
    return s;
}

Setup flat_setup() { return make_setup(MetricField::flat(2)); }

Setup shear_setup() {
    Mat a(2, 2);
    a << 1, 1, 0, 1;
    return make_setup(MetricField::linear_pullback(a));
}

Setup sine_setup() {
    return make_setup(MetricField::sine_pullback(v2(0.0, 0.3), v2(1.0, 1.0)));
}

}  // namespace

TEST_CASE("single vertex maps to its embedded rounding") {
    Setup s = flat_setup();
    Vec img = s.eval->evaluate({iv({2, 3})}, bary({1.0}));
    CHECK((img - v2(2, 3)).norm() == 0.0);
    // sine pullback: vertex image is the pullback preimage of the net point
    Setup sp = sine_setup();
    Vec img2 = sp.eval->evaluate({iv({2, 3})}, bary({1.0}));
    CHECK((img2 - sp.metric->pullback_inverse(v2(2, 3))).norm() == 0.0);
}

TEST_CASE("flat evaluation is affine: centroid example") {
    Setup s = flat_setup();
    Vec c = s.eval->evaluate({iv({0, 0}), iv({1, 0}), iv({1, 1})},
                             bary({1.0 / 3, 1.0 / 3, 1.0 / 3}));
    CHECK((c - v2(2.0 / 3, 1.0 / 3)).norm() < 1e-9);
}

TEST_CASE("shear midpoint is the pullback preimage of the image midpoint") {
    Setup s = shear_setup();
    Vec mid = s.eval->evaluate({iv({0, 0}), iv({0, 1})}, bary({0.5, 0.5}));
    // phi(0,0) = (0,0), phi-image of net point (0,1) is (0,1) itself; the
    // geodesic midpoint is phi^{-1}((phi(iota(0,0)) + phi(iota(0,1)))/2)
    Vec expected = s.metric->pullback_inverse(
        0.5 * (s.metric->pullback((*s.embedding)(v2(0, 0))) +
               s.metric->pullback((*s.embedding)(v2(0, 1)))));
    CHECK((mid - expected).norm() < 1e-9);
}

TEST_CASE("flat-identity collapse: evaluation equals the barycentric combination") {
    Setup s = flat_setup();
    SplitMix64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        Vec x = v2(rng.uniform(-6, 6), rng.uniform(-6, 6));
        BarycentricPoint bp = locate(x, 1.0);
        Vec img = s.eval->evaluate(bp);
        CHECK((img - x).norm() < 1e-9);
    }
}

TEST_CASE("face value is returned exactly when lambda0 = 0") {
    Setup s = sine_setup();
    std::vector<Eigen::VectorXi> tri = {iv({0, 0}), iv({1, 0}), iv({1, 1})};
    std::vector<Eigen::VectorXi> edge = {iv({1, 0}), iv({1, 1})};
    Vec full = s.eval->evaluate(tri, bary({0.0, 0.3, 0.7}));
    Vec face = s.eval->evaluate(edge, bary({0.3, 0.7}));
    CHECK((full - face).norm() == 0.0);
}

TEST_CASE("lambda0 snaps to one near the vertex") {
    Setup s = sine_setup();
    std::vector<Eigen::VectorXi> tri = {iv({0, 0}), iv({1, 0}), iv({1, 1})};
    Vec almost = bary({1.0 - 1e-13, 0.5e-13, 0.5e-13});
    CHECK((s.eval->evaluate(tri, almost) - s.eval->vertex_image(iv({0, 0}))).norm() == 0.0);
}

TEST_CASE("chain bound: flat triangle and segment equality case") {
    Setup s = flat_setup();
    auto report = s.eval->verify_chain_bound({iv({0, 0}), iv({1, 0}), iv({1, 1})}, 200);
    CHECK(report.bound == doctest::Approx(2.0));
    CHECK(report.max_observed == doctest::Approx(std::sqrt(2.0)));
    CHECK(report.min_slack == doctest::Approx(2.0 - std::sqrt(2.0)));
    CHECK(report.min_slack >= -1e-7);

    // single edge: the far endpoint realizes the bound, slack exactly 0
    auto seg = s.eval->verify_chain_bound({iv({0, 0}), iv({1, 0})}, 100);
    CHECK(seg.bound == doctest::Approx(1.0));
    CHECK(seg.min_slack == doctest::Approx(0.0));
}

TEST_CASE("chain bound holds on pullback scenarios") {
    for (Setup s : {shear_setup(), sine_setup()}) {
        for (auto& simplex : kuhn_simplices(iv({0, 0}), 1.0)) {
            auto report = s.eval->verify_chain_bound(simplex.vertex_indices(), 100);
            CHECK(report.min_slack >= -1e-7);
        }
        auto report3 = s.eval->verify_chain_bound({iv({-1, 2}), iv({0, 2}), iv({0, 3})}, 100);
        CHECK(report3.min_slack >= -1e-7);
    }
}

TEST_CASE("face consistency across the shared diagonal") {
    auto simplices = kuhn_simplices(iv({0, 0}), 1.0);
    REQUIRE(simplices.size() == 2);
    std::vector<Eigen::VectorXi> diag = {iv({0, 0}), iv({1, 1})};

    Setup flat = flat_setup();
    auto rep = flat.eval->verify_face_consistency(simplices[0], simplices[1], diag, 50);
    CHECK(rep.max_discrepancy < 1e-12);

    Setup sine = sine_setup();
    auto rep2 = sine.eval->verify_face_consistency(simplices[0], simplices[1], diag, 50);
    CHECK(rep2.max_discrepancy < 1e-6);
}

TEST_CASE("face consistency at a shared cube facet") {
    Setup s = sine_setup();
    // facet {(1,0),(1,1)} is shared between the cubes anchored at (0,0) and (1,0)
    std::vector<Eigen::VectorXi> facet = {iv({1, 0}), iv({1, 1})};
    auto sharing = simplices_containing_face(facet, 1.0);
    REQUIRE(sharing.size() == 2);
    auto rep = s.eval->verify_face_consistency(sharing[0], sharing[1], facet, 50);
    CHECK(rep.max_discrepancy < 1e-6);
}

TEST_CASE("vertex of a shared face maps identically through either simplex") {
    Setup s = sine_setup();
    auto simplices = kuhn_simplices(iv({0, 0}), 1.0);
    std::vector<Eigen::VectorXi> diag = {iv({0, 0}), iv({1, 1})};
    Vec mu = bary({1.0, 0.0});
    Vec via_face = s.eval->evaluate(diag, mu);
    CHECK((via_face - s.eval->vertex_image(iv({0, 0}))).norm() == 0.0);
}

TEST_CASE("continuity probe: nearby barycentric inputs give nearby outputs") {
    Setup s = sine_setup();
    std::vector<Eigen::VectorXi> tri = {iv({0, 0}), iv({1, 0}), iv({1, 1})};
    double diameter = std::sqrt(2.0);
    SplitMix64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        Vec lambda = simplex_sample(2, trial + 3);
        Vec perturb(3);
        for (int i = 0; i < 3; ++i) perturb[i] = rng.uniform(-1.0, 1.0);
        perturb.array() -= perturb.mean();  // keep the sum at one
        Vec lambda2 = lambda + 1e-6 * perturb;
        if (lambda2.minCoeff() < 0) continue;
        Vec a = s.eval->evaluate(tri, lambda);
        Vec b = s.eval->evaluate(tri, lambda2);
        CHECK((a - b).norm() < 10.0 * diameter * 1e-6);
    }
}

TEST_CASE("evaluations are bitwise reproducible and thread-safe") {
    Setup s = sine_setup();
    std::vector<Eigen::VectorXi> tri = {iv({0, 0}), iv({1, 0}), iv({1, 1})};
    std::vector<Vec> lambdas;
    for (int i = 0; i < 24; ++i) lambdas.push_back(simplex_sample(2, i));

    std::vector<Vec> serial(lambdas.size());
    for (std::size_t i = 0; i < lambdas.size(); ++i) serial[i] = s.eval->evaluate(tri, lambdas[i]);

    Setup fresh = sine_setup();
    std::vector<Vec> parallel(lambdas.size());
    std::vector<std::thread> pool;
    for (int t = 0; t < 4; ++t)
        pool.emplace_back([&, t]() {
            for (std::size_t i = t; i < lambdas.size(); i += 4)
                parallel[i] = fresh.eval->evaluate(tri, lambdas[i]);
        });
    for (auto& th : pool) th.join();

    for (std::size_t i = 0; i < lambdas.size(); ++i)
        CHECK((serial[i] - parallel[i]).norm() == 0.0);
}

TEST_CASE("evaluation errors carry the vertex tuple") {
    // conformal metric with the identity embedding: the connecting geodesic
    // across a wide diagonal defeats single shooting, and the failure surfaces
    // with the offending vertices attached
    auto metric = std::make_shared<MetricField>(
        MetricField::conformal(v2(1.0, 0.0)));
    auto net = std::make_shared<Net>(
        Net::generate(2, 1.0, 0.75, 0.0, 1, Box::centered(2, 10)));
    SimplexMapEvaluator eval(metric, std::make_shared<NetRounding>(net),
                             std::make_shared<Embedding>(Embedding::identity()), 1.0);
    try {
        eval.evaluate({iv({-2, -2}), iv({2, 2})}, bary({0.5, 0.5}));
        FAIL("expected an evaluation error");
    } catch (const EvaluationError& e) {
        REQUIRE(e.vertices.size() == 2);
        CHECK((e.vertices[0] - iv({-2, -2})).cwiseAbs().maxCoeff() == 0);
        CHECK((e.vertices[1] - iv({2, 2})).cwiseAbs().maxCoeff() == 0);
    }
}

TEST_CASE("simplex samples are valid barycentric vectors") {
    for (int k : {1, 2, 3}) {
        for (long i = 0; i < 200; ++i) {
            Vec lambda = simplex_sample(k, i);
            CHECK(lambda.size() == k + 1);
            CHECK(lambda.minCoeff() >= 0.0);
            CHECK(std::abs(lambda.sum() - 1.0) < 1e-12);
        }
    }
}
