#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "netembed/manifold.hpp"

namespace netembed {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CoverageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Axis-aligned box [lo_i, hi_i]^n.
struct Box {
    Vec lo;
    Vec hi;

    int dimension() const { return static_cast<int>(lo.size()); }
    bool contains(const Vec& x, double margin = 0.0) const;
    static Box centered(int n, double radius);
};

/// eps * Z^n
struct Lattice {
    double epsilon = 1.0;

    explicit Lattice(double eps);
    Vec point(const Eigen::VectorXi& index) const;
};

/// Minimal-norm vertex among the lattice points nearest to x. Odd in x, and
/// |result - x| <= eps*sqrt(n)/2 with equality only at cube centers. The
/// minimization is separable per coordinate, so no 2^n enumeration is needed;
/// the per-coordinate argmin is always unique (|k| = |k+1| has no integer
/// solution), which the implementation asserts by construction.
Vec lattice_round(const Vec& x, const Lattice& lattice);

/// Integer-index version of lattice_round.
Eigen::VectorXi lattice_round_index(const Vec& x, const Lattice& lattice);

/// Finite delta-net in R^n. Two storage modes:
///   materialized — an explicit point list (generated or loaded from file),
///                  nearest-point queries through a uniform grid hash;
///   procedural   — a jittered eps_base-lattice whose points are recomputed on
///                  demand from (seed, lattice index), allowing boxes far too
///                  large to store. Identical parameters produce identical
///                  points in both modes.
class Net {
public:
    /// Jittered lattice net. Requires eps_base*sqrt(n)/2 + jitter < delta so the
    /// covering radius stays below delta.
    static Net generate(int n, double eps_base, double delta, double jitter,
                        std::uint64_t seed, const Box& box, bool materialize = true);

    /// Plain-text format: first line "n delta", one point per line after.
    static Net load(const std::string& path);
    void save(const std::string& path) const;

    int dimension() const { return n_; }
    double delta() const { return delta_; }
    const Box& box() const { return box_; }
    bool procedural() const { return !materialized_; }
    double eps_base() const { return eps_base_; }
    double jitter() const { return jitter_; }
    std::uint64_t seed() const { return seed_; }

    /// Materialized point list; throws for procedural nets.
    const std::vector<Vec>& points() const;

    /// Net point for a generated-lattice index (both modes).
    Vec generated_point(const Eigen::VectorXi& index) const;

    /// Nearest net point to x (ties broken toward the lexicographically
    /// smallest point). Throws CoverageError outside the guaranteed-coverage
    /// region of the box.
    Vec nearest(const Vec& x) const;

    /// |x - nearest(x)|
    double rounding_gap(const Vec& x) const;

    /// Net points within Euclidean distance radius of x (for candidate pruning).
    std::vector<Vec> neighbors(const Vec& x, double radius) const;

private:
    Net() = default;
    void build_grid();

    int n_ = 0;
    double delta_ = 0.0;
    Box box_;
    bool materialized_ = true;
    bool generated_ = false;
    double eps_base_ = 1.0;
    double jitter_ = 0.0;
    std::uint64_t seed_ = 0;
    std::vector<Vec> points_;
    // uniform grid hash for materialized nets
    double cell_ = 1.0;
    std::unordered_map<std::uint64_t, std::vector<int>> grid_;
};

/// Net-rounding map nu: R^n -> X with per-point gap delta_nu(x) = |x - nu(x)| < delta.
class NetRounding {
public:
    explicit NetRounding(std::shared_ptr<const Net> net) : net_(std::move(net)) {}

    Vec operator()(const Vec& x) const { return net_->nearest(x); }
    double gap(const Vec& x) const { return net_->rounding_gap(x); }
    const Net& net() const { return *net_; }

private:
    std::shared_ptr<const Net> net_;
};

/// Map from net points into the manifold chart.
/// Modes: pullback (iota = phi^{-1}), identity (iota = id), table (explicit map).
class Embedding {
public:
    enum class Mode { Pullback, Identity, Table };

    static Embedding pullback(std::shared_ptr<const MetricField> metric);
    static Embedding identity();
    /// Plain-text table with 2n columns per line: net point, chart image.
    static Embedding load_table(const std::string& path, int n);

    Mode mode() const { return mode_; }
    Vec operator()(const Vec& net_point) const;

private:
    Embedding() = default;

    struct VecKey {
        std::vector<double> v;
        bool operator==(const VecKey&) const = default;
    };
    struct VecKeyHash {
        std::size_t operator()(const VecKey& k) const;
    };

    Mode mode_ = Mode::Identity;
    std::shared_ptr<const MetricField> metric_;
    std::unordered_map<VecKey, Vec, VecKeyHash> table_;
};

struct DistortionReport {
    double max_distortion = 0.0;
    Vec worst_p, worst_q;
    long pairs = 0;
};

/// Audits |d(iota(p), iota(q)) - |p - q|| over net point pairs: all pairs when
/// the materialized net is small, otherwise a seeded sample drawn inside
/// sample_radius of the origin.
DistortionReport distortion_audit(const Net& net, const MetricField& metric,
                                  const Embedding& iota, long pair_budget,
                                  std::uint64_t seed, double sample_radius,
                                  int threads = 0);

}  // namespace netembed
