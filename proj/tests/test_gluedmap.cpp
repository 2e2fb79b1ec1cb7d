#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "netembed/gluedmap.hpp"
#include "netembed/rng.hpp"

using namespace netembed;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

struct Scene {
    std::shared_ptr<MetricField> metric;
    std::shared_ptr<Net> net;
    std::shared_ptr<NetRounding> rounding;
    std::shared_ptr<Embedding> embedding;
    std::shared_ptr<SimplexMapEvaluator> eval;
    std::shared_ptr<GluedMap> map;
};

Scene make_scene(MetricField m, double radius, double delta, double jitter = 0.0,
                 double lattice_eps = 1.0, bool materialize = true) {
    Scene s;
    s.metric = std::make_shared<MetricField>(std::move(m));
    int n = s.metric->dimension();
    s.net = std::make_shared<Net>(
        Net::generate(n, 1.0, delta, jitter, 7, Box::centered(n, radius), materialize));
    s.rounding = std::make_shared<NetRounding>(s.net);
    s.embedding = std::make_shared<Embedding>(
        s.metric->has_pullback() ? Embedding::pullback(s.metric) : Embedding::identity());
    s.eval = std::make_shared<SimplexMapEvaluator>(s.metric, s.rounding, s.embedding, lattice_eps);
    s.map = std::make_shared<GluedMap>(s.eval);
    return s;
}

Scene flat_scene(double radius = 25.0) { return make_scene(MetricField::flat(2), radius, 0.75); }

Scene shear_scene(double radius = 12.0) {
    Mat a(2, 2);
    a << 1, 1, 0, 1;
    return make_scene(MetricField::linear_pullback(a), radius, 0.75);
}

Scene sine_scene(double radius = 12.0, double jitter = 0.0) {
    return make_scene(MetricField::sine_pullback(v2(0.0, 0.3), v2(1.0, 1.0)), radius,
                      jitter > 0 ? 0.85 : 0.75, jitter);
}

}  // namespace

TEST_CASE("derived radii match the closed-form constants") {
    // eps = 0.1 lattice over a delta = 0.2 net (eps_base 0.25 keeps covering below delta)
    auto metric = std::make_shared<MetricField>(MetricField::flat(2));
    auto net = std::make_shared<Net>(Net::generate(2, 0.25, 0.2, 0.0, 7, Box::centered(2, 4.0)));
    auto rounding = std::make_shared<NetRounding>(net);
    auto embedding = std::make_shared<Embedding>(Embedding::identity());
    auto eval = std::make_shared<SimplexMapEvaluator>(metric, rounding, embedding, 0.1);
    GluedMap map(eval);
    CHECK(map.offset_radius() == doctest::Approx(2.0121320344).epsilon(1e-9));
    CHECK(map.separation_radius() == doctest::Approx(3.7535533906).epsilon(1e-9));
}

TEST_CASE("degenerate radius formulas vanish with eps and delta") {
    // the formulas, not a constructed object: (eps+2d)n + 1.5 eps sqrt(n) + 4d etc.
    auto r0 = [](double eps, double d, int n) {
        return (eps + 2 * d) * n + 1.5 * eps * std::sqrt(double(n)) + 4 * d;
    };
    auto r1 = [](double eps, double d, int n) {
        return 2 * (eps + 2 * d) * n + 2.5 * eps * std::sqrt(double(n)) + 7 * d;
    };
    CHECK(r0(0, 0, 2) == 0.0);
    CHECK(r1(0, 0, 3) == 0.0);
}

TEST_CASE("flat identity collapse: the glued map is the identity") {
    Scene s = flat_scene(8.0);
    SplitMix64 rng(3);
    for (int i = 0; i < 60; ++i) {
        Vec x = v2(rng.uniform(-5, 5), rng.uniform(-5, 5));
        CHECK(((*s.map)(x) - x).norm() < 1e-9);
    }
    // lattice points map to their embedded roundings exactly
    CHECK(((*s.map)(v2(3, -2)) - v2(3, -2)).norm() == 0.0);
}

TEST_CASE("linear pullback conjugates the flat construction") {
    Scene s = shear_scene();
    Mat ainv(2, 2);
    ainv << 1, -1, 0, 1;
    SplitMix64 rng(5);
    CHECK(((*s.map)(v2(0.5, 0.5)) - v2(0.0, 0.5)).norm() < 1e-9);
    for (int i = 0; i < 25; ++i) {
        Vec x = v2(rng.uniform(-4, 4), rng.uniform(-4, 4));
        CHECK(((*s.map)(x) - ainv * x).norm() < 1e-8);
    }
}

TEST_CASE("round-preserving bound on the flat scenario") {
    Scene s = flat_scene(8.0);
    auto report = s.map->verify_round_preserving(v2(0.4, 0.7));
    CHECK(report.bound == doctest::Approx(2.0));  // n * (eps + 0)
    CHECK(report.observed <= std::sqrt(2.0) + 1e-12);
    CHECK(report.slack >= 2.0 - std::sqrt(2.0) - 1e-12);

    // a lattice point anchors to the cube below it (lexicographic tie-break),
    // so the observed distance is the cube diagonal, still within the bound
    auto at_lattice = s.map->verify_round_preserving(v2(3.0, -2.0));
    CHECK((at_lattice.anchor - (Eigen::VectorXi(2) << 2, -3).finished()).cwiseAbs().maxCoeff() == 0);
    CHECK(at_lattice.observed == doctest::Approx(std::sqrt(2.0)));
    CHECK(at_lattice.slack >= 2.0 - std::sqrt(2.0) - 1e-12);

    // just inside the anchor corner the evaluation snaps to the anchor image
    auto at_anchor = s.map->verify_round_preserving(v2(3.0 + 1e-15, -2.0 + 1e-15));
    CHECK(at_anchor.observed < 1e-12);
    CHECK(at_anchor.slack == doctest::Approx(at_anchor.bound));
}

TEST_CASE("round-preserving bound formula uses the worst cube-vertex gap") {
    // eps = 0.1 lattice over a jittered delta = 0.2 net: the bound must equal
    // n * (eps + 2 * max gap over the cube's vertices), gaps computed directly
    auto metric = std::make_shared<MetricField>(MetricField::flat(2));
    auto net = std::make_shared<Net>(Net::generate(2, 0.25, 0.2, 0.02, 11, Box::centered(2, 6.0)));
    auto rounding = std::make_shared<NetRounding>(net);
    auto embedding = std::make_shared<Embedding>(Embedding::identity());
    auto eval = std::make_shared<SimplexMapEvaluator>(metric, rounding, embedding, 0.1);
    GluedMap map(eval);
    SplitMix64 rng(31);
    for (int i = 0; i < 10; ++i) {
        Vec x = v2(rng.uniform(-1, 1), rng.uniform(-1, 1));
        auto report = map.verify_round_preserving(x);
        double worst_gap = 0.0;
        for (int dx = 0; dx <= 1; ++dx)
            for (int dy = 0; dy <= 1; ++dy)
                worst_gap = std::max(
                    worst_gap, rounding->gap(v2(0.1 * (report.anchor[0] + dx),
                                                0.1 * (report.anchor[1] + dy))));
        CHECK(report.bound == doctest::Approx(2.0 * (0.1 + 2.0 * worst_gap)).epsilon(1e-12));
        CHECK(report.slack >= -1e-7);
    }
}

TEST_CASE("round-preserving bound holds on pullback scenarios") {
    SplitMix64 rng(11);
    for (Scene s : {shear_scene(), sine_scene(12.0, 0.1)}) {
        for (int i = 0; i < 30; ++i) {
            Vec x = v2(rng.uniform(-4, 4), rng.uniform(-4, 4));
            auto report = s.map->verify_round_preserving(x);
            CHECK(report.slack >= -1e-7);
        }
    }
}

TEST_CASE("origin lower bound") {
    Scene s = flat_scene(8.0);
    auto at5 = s.map->verify_origin_bound(v2(5, 0));
    CHECK(at5.origin_distance == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(at5.slack == doctest::Approx(s.map->offset_radius()).epsilon(1e-6));
    auto at_o = s.map->verify_origin_bound(v2(0, 0));
    CHECK(at_o.origin_distance < 1e-9);
    CHECK(at_o.slack == doctest::Approx(s.map->offset_radius()).epsilon(1e-9));

    Scene sp = sine_scene(12.0, 0.1);
    SplitMix64 rng(13);
    for (int i = 0; i < 20; ++i) {
        Vec x = v2(rng.uniform(-6, 6), rng.uniform(-6, 6));
        CHECK(sp.map->verify_origin_bound(x).slack > 0.0);
    }
}

TEST_CASE("circle degree: identity and reflection self-tests") {
    auto identity = [](const Eigen::Vector2d& v) { return v; };
    auto reflect = [](const Eigen::Vector2d& v) { return Eigen::Vector2d(v.x(), -v.y()); };
    auto doubled = [](const Eigen::Vector2d& v) {
        double t = std::atan2(v.y(), v.x());
        return Eigen::Vector2d(std::cos(2 * t), std::sin(2 * t));
    };
    double gap = 0.0;
    CHECK(circle_degree(identity, 64, 1, &gap) == 1);
    CHECK(gap == doctest::Approx(M_PI));
    CHECK(circle_degree(reflect, 64, 1) == -1);
    CHECK(circle_degree(doubled, 64, 1) == 2);
}

TEST_CASE("sphere degree: identity and reflection self-tests") {
    auto identity = [](const Eigen::Vector3d& v) { return v; };
    auto reflect = [](const Eigen::Vector3d& v) { return Eigen::Vector3d(v.x(), v.y(), -v.z()); };
    double gap = 0.0;
    long used = 0;
    CHECK(sphere_degree(identity, 2, 1, 1, &gap, &used) == 1);
    CHECK(gap == doctest::Approx(M_PI));
    CHECK(used == Icosphere::vertex_count(2));
    CHECK(sphere_degree(reflect, 2, 1, 1) == -1);
}

TEST_CASE("sphere degree: longitude doubling and constant maps") {
    // doubling the longitude while keeping the latitude covers twice
    auto doubler = [](const Eigen::Vector3d& v) {
        double rho = std::hypot(v.x(), v.y());
        if (rho < 1e-12) return v;
        return Eigen::Vector3d((v.x() * v.x() - v.y() * v.y()) / rho, 2 * v.x() * v.y() / rho,
                               v.z());
    };
    CHECK(sphere_degree(doubler, 3, 1, 2) == 2);

    auto constant = [](const Eigen::Vector3d&) { return Eigen::Vector3d(1, 0, 0); };
    CHECK(sphere_degree(constant, 2, 1, 1) == 0);
}

TEST_CASE("flat degree at radius 20 with antipodal gap pi") {
    Scene s = flat_scene(25.0);
    auto report = s.map->degree(20.0, 256, 1, 2);
    CHECK(report.degree == 1);
    CHECK(report.min_antipodal_gap == doctest::Approx(M_PI).epsilon(1e-6));
    CHECK_FALSE(report.below_separation_radius);

    auto anti = s.map->antipodal_check(20.0, 32, 2);
    CHECK(anti.min_angle == doctest::Approx(M_PI).epsilon(1e-6));
    CHECK(anti.min_distance_margin > 0.0);

    // below the separation radius the check still runs, with a warning flag
    auto below = s.map->antipodal_check(12.0, 8, 2);
    CHECK(below.below_separation_radius);
    CHECK_FALSE(anti.below_separation_radius);
}

TEST_CASE("sine pullback degree and antipodal separation") {
    Scene s = sine_scene(26.0, 0.1);
    double r1 = s.map->separation_radius();
    REQUIRE(r1 < 22.0);
    auto report = s.map->degree(r1, 128, 1, 2);
    CHECK(report.degree == 1);
    CHECK(report.min_antipodal_gap > 0.1);

    auto anti = s.map->antipodal_check(r1, 16, 2, true);
    CHECK(anti.min_angle > 0.1);
    CHECK(anti.min_distance_margin > 0.0);
    CHECK(anti.details.size() == 16);
    for (const auto& d : anti.details) CHECK(d.image_distance > d.radial_gap);
}

TEST_CASE("degree rejects radii below the safe floor") {
    Scene s = flat_scene(8.0);
    CHECK_THROWS_AS(s.map->degree(2.0, 64), std::invalid_argument);
}

TEST_CASE("winding refinement handles coarse initial sampling") {
    auto doubled = [](const Eigen::Vector2d& v) {
        double t = std::atan2(v.y(), v.x());
        return Eigen::Vector2d(std::cos(2 * t), std::sin(2 * t));
    };
    // 8 samples step by pi/2 in the image, forcing bisection
    long used = 0;
    CHECK(circle_degree(doubled, 8, 1, nullptr, &used) == 2);
    CHECK(used > 8);
}

TEST_CASE("winding refinement budget is enforced") {
    // a map of very high degree needs more bisection than the budget allows
    auto whirl = [](const Eigen::Vector2d& v) {
        double t = std::atan2(v.y(), v.x());
        return Eigen::Vector2d(std::cos(333 * t), std::sin(333 * t));
    };
    CHECK_THROWS_AS(circle_degree(whirl, 8, 1), ResolutionError);
}

TEST_CASE("glued map is uniformly continuous at sampled scale") {
    Scene s = sine_scene(12.0, 0.1);
    SplitMix64 rng(23);
    for (int i = 0; i < 25; ++i) {
        Vec x = v2(rng.uniform(-4, 4), rng.uniform(-4, 4));
        Vec dx = rng.unit_vector(2) * 1e-6;
        CHECK(((*s.map)(x + dx) - (*s.map)(x)).norm() < 1e-4);
    }
}

TEST_CASE("preimage probe") {
    Scene s = flat_scene(8.0);
    auto direct = s.map->find_preimage(v2(2.5, -1.2));
    CHECK(direct.found);
    CHECK((direct.preimage - v2(2.5, -1.2)).norm() < 1e-6);

    // a lattice image is found in the quick vertex pass
    auto vertex = s.map->find_preimage(v2(3, 1));
    CHECK(vertex.found);
    CHECK((vertex.preimage - v2(3, 1)).norm() == 0.0);

    Scene sp = sine_scene(10.0);
    SplitMix64 rng(17);
    int found = 0;
    for (int i = 0; i < 12; ++i) {
        Vec y = v2(rng.uniform(-3, 3), rng.uniform(-3, 3));
        auto rep = sp.map->find_preimage(y);
        if (rep.found) {
            ++found;
            CHECK(((*sp.map)(rep.preimage) - y).norm() < 2e-6);
        }
    }
    CHECK(found == 12);
}

TEST_CASE("n = 3 flat identity and degree") {
    Scene s = make_scene(MetricField::flat(3), 33.0, 0.9, 0.0, 1.0, false);
    SplitMix64 rng(19);
    for (int i = 0; i < 15; ++i) {
        Vec x(3);
        for (int k = 0; k < 3; ++k) x[k] = rng.uniform(-4, 4);
        CHECK(((*s.map)(x) - x).norm() < 1e-9);
    }
    double r1 = s.map->separation_radius();
    auto report = s.map->degree(std::max(r1, s.map->offset_radius() + 1.0), 1, 1, 2);
    CHECK(report.degree == 1);
    CHECK(report.min_antipodal_gap == doctest::Approx(M_PI).epsilon(1e-6));
}
