#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <memory>

#include "netembed/netlattice.hpp"
#include "netembed/rng.hpp"

using namespace netembed;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Net lattice_net_2d(double radius = 10.0, double delta = 0.75) {
    return Net::generate(2, 1.0, delta, 0.0, 1, Box::centered(2, radius));
}

}  // namespace

TEST_CASE("generate_net preconditions") {
    // sqrt(2)/2 ~ 0.7071 < 0.75: fine
    CHECK_NOTHROW(Net::generate(2, 1.0, 0.75, 0.0, 1, Box::centered(2, 5)));
    // 0.7071 + 0.1 > 0.75: rejected, message names the inequality
    CHECK_THROWS_WITH_AS(Net::generate(2, 1.0, 0.75, 0.1, 1, Box::centered(2, 5)),
                         doctest::Contains("covering precondition"), ConfigError);
    CHECK_THROWS_AS(Net::generate(2, -1.0, 0.75, 0.0, 1, Box::centered(2, 5)), ConfigError);
}

TEST_CASE("zero jitter reproduces the lattice") {
    Net net = lattice_net_2d(3.0);
    CHECK(net.points().size() == 49);  // 7 x 7
    for (const Vec& p : net.points()) {
        CHECK(p[0] == std::round(p[0]));
        CHECK(p[1] == std::round(p[1]));
    }
}

TEST_CASE("net covering spot-check on a dense grid") {
    std::uint64_t seed = 77;
    Net net = Net::generate(2, 1.0, 0.85, 0.1, seed, Box::centered(2, 6));
    SplitMix64 rng(5);
    for (int i = 0; i < 2000; ++i) {
        Vec x = v2(rng.uniform(-5.5, 5.5), rng.uniform(-5.5, 5.5));
        CHECK(net.rounding_gap(x) < 0.85);
    }
}

TEST_CASE("nearest-point rounding and tie-breaks") {
    Net net = lattice_net_2d();
    CHECK((net.nearest(v2(0.2, 0.1)) - v2(0, 0)).norm() == 0.0);
    CHECK(net.rounding_gap(v2(0.2, 0.1)) == doctest::Approx(std::sqrt(0.05)));
    // a net point rounds to itself
    CHECK((net.nearest(v2(3, -2)) - v2(3, -2)).norm() == 0.0);
    CHECK(net.rounding_gap(v2(3, -2)) == 0.0);
    // equidistant between (0,0) and (1,0): lexicographically smallest wins
    CHECK((net.nearest(v2(0.5, 0.0)) - v2(0, 0)).norm() == 0.0);
    // outside the box
    CHECK_THROWS_AS(net.nearest(v2(11.0, 0.0)), CoverageError);
}

TEST_CASE("procedural and materialized nets agree point by point") {
    Box box = Box::centered(2, 8);
    std::uint64_t seed = 42;
    Net mat = Net::generate(2, 1.0, 0.85, 0.1, seed, box, true);
    Net proc = Net::generate(2, 1.0, 0.85, 0.1, seed, box, false);
    CHECK(proc.procedural());
    SplitMix64 rng(9);
    for (int i = 0; i < 500; ++i) {
        Vec x = v2(rng.uniform(-7, 7), rng.uniform(-7, 7));
        CHECK((mat.nearest(x) - proc.nearest(x)).norm() == 0.0);
    }
}

TEST_CASE("lattice rounding: examples, oddness, bound") {
    Lattice unit(1.0);
    CHECK((lattice_round(v2(0.5, 0.5), unit) - v2(0, 0)).norm() == 0.0);
    CHECK((lattice_round(v2(0.7, 0.2), unit) - v2(1, 0)).norm() == 0.0);
    CHECK((lattice_round(v2(-0.5, 0.25), unit) - v2(0, 0)).norm() == 0.0);
    CHECK((lattice_round(v2(0.5, -0.25), unit) + lattice_round(v2(-0.5, 0.25), unit)).norm() ==
          0.0);

    SplitMix64 rng(123);
    for (int n : {2, 3}) {
        Lattice lat(0.5);
        double bound = 0.5 * std::sqrt(static_cast<double>(n)) / 2.0;
        for (int i = 0; i < 20000; ++i) {
            // grid of exactly representable multiples of 1/64 keeps oddness exact
            Vec x(n);
            for (int k = 0; k < n; ++k)
                x[k] = (static_cast<double>(rng.next() % 2561) - 1280.0) / 64.0;
            Vec g = lattice_round(x, lat);
            CHECK((lattice_round(-x, lat) + g).norm() == 0.0);
            CHECK((g - x).norm() <= bound + 1e-15);
        }
        // the bound is attained exactly at cube centers
        Vec center = Vec::Constant(n, 0.25);
        CHECK((lattice_round(center, lat) - center).norm() == doctest::Approx(bound));
    }
}

TEST_CASE("distortion audit modes") {
    auto flat = std::make_shared<MetricField>(MetricField::flat(2));
    Net small = Net::generate(2, 1.0, 0.75, 0.0, 1, Box::centered(2, 2));
    auto rep = distortion_audit(small, *flat, Embedding::identity(), 400, 3, 10.0, 1);
    CHECK(rep.max_distortion < 1e-12);

    // pullback embedding is isometric up to solver tolerance
    auto sine = std::make_shared<MetricField>(
        MetricField::sine_pullback(v2(0.0, 0.3), v2(1.0, 1.0)));
    Net jittered = Net::generate(2, 1.0, 0.85, 0.1, 5, Box::centered(2, 3));
    auto rep2 = distortion_audit(jittered, *sine, Embedding::pullback(sine), 150, 3, 10.0, 2);
    CHECK(rep2.max_distortion < 1e-6);
    CHECK(rep2.pairs == 150);
}

TEST_CASE("conformal identity embedding shows large distortion") {
    auto conf = std::make_shared<MetricField>(MetricField::conformal(v2(1.0, 0.0)));
    // X = Z^2 over [0,3]^2
    Box box;
    box.lo = v2(0, 0);
    box.hi = v2(3, 3);
    Net net = Net::generate(2, 1.0, 0.75, 0.0, 1, box);
    auto rep = distortion_audit(net, *conf, Embedding::identity(), 200, 3, 10.0, 2);
    CHECK(rep.max_distortion > 0.1);
}

TEST_CASE("net file round trip") {
    Net net = Net::generate(2, 1.0, 0.85, 0.1, 9, Box::centered(2, 3));
    std::string path = "test_net_roundtrip.txt";
    net.save(path);
    Net loaded = Net::load(path);
    REQUIRE(loaded.points().size() == net.points().size());
    for (std::size_t i = 0; i < net.points().size(); ++i)
        CHECK((loaded.points()[i] - net.points()[i]).norm() == 0.0);
    CHECK(loaded.delta() == net.delta());
    // nearest-point queries agree inside the loaded bounding box
    SplitMix64 rng(10);
    for (int i = 0; i < 200; ++i) {
        Vec x = v2(rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5));
        CHECK((loaded.nearest(x) - net.nearest(x)).norm() == 0.0);
    }
    std::remove(path.c_str());
}

TEST_CASE("embedding table load") {
    std::string path = "test_embed_table.txt";
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::fputs("0 0 0.5 0.25\n1 0 1.5 0.25\n", f);
        std::fclose(f);
    }
    Embedding table = Embedding::load_table(path, 2);
    CHECK((table(v2(0, 0)) - v2(0.5, 0.25)).norm() == 0.0);
    CHECK((table(v2(1, 0)) - v2(1.5, 0.25)).norm() == 0.0);
    CHECK_THROWS_AS(table(v2(2, 2)), std::out_of_range);
    std::remove(path.c_str());
}
