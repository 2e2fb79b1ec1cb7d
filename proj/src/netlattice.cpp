#include "netembed/netlattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "netembed/parallel.hpp"
#include "netembed/rng.hpp"

namespace netembed {

namespace {

bool lex_less(const Vec& a, const Vec& b) {
    for (int i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return false;
}

std::uint64_t cell_key(const Eigen::VectorXi& c) {
    std::uint64_t h = 0x51ab7e21d0c9f3a5ull;
    for (int i = 0; i < c.size(); ++i)
        h = hash_mix(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(c[i])));
    return h;
}

double canonical_zero(double v) { return v + 0.0; }

}  // namespace

// ---------------------------------------------------------------------------
// Box

bool Box::contains(const Vec& x, double margin) const {
    for (int i = 0; i < x.size(); ++i)
        if (x[i] < lo[i] + margin || x[i] > hi[i] - margin) return false;
    return true;
}

Box Box::centered(int n, double radius) {
    Box b;
    b.lo = Vec::Constant(n, -radius);
    b.hi = Vec::Constant(n, radius);
    return b;
}

// ---------------------------------------------------------------------------
// Lattice rounding

Lattice::Lattice(double eps) : epsilon(eps) {
    if (!(eps > 0)) throw ConfigError("lattice scale must be positive");
}

Vec Lattice::point(const Eigen::VectorXi& index) const {
    Vec p(index.size());
    for (int i = 0; i < index.size(); ++i) p[i] = epsilon * index[i];
    return p;
}

Eigen::VectorXi lattice_round_index(const Vec& x, const Lattice& lattice) {
    const int n = static_cast<int>(x.size());
    Eigen::VectorXi out(n);
    for (int i = 0; i < n; ++i) {
        double t = x[i] / lattice.epsilon;
        double k = std::floor(t);
        double frac = t - k;
        double chosen;
        if (frac < 0.5) {
            chosen = k;
        } else if (frac > 0.5) {
            chosen = k + 1;
        } else {
            // tie between k and k+1: take the candidate of smaller magnitude;
            // |k| = |k+1| has no integer solution, so this argmin is unique
            chosen = std::abs(k) < std::abs(k + 1) ? k : k + 1;
        }
        out[i] = static_cast<int>(chosen);
    }
    return out;
}

Vec lattice_round(const Vec& x, const Lattice& lattice) {
    return lattice.point(lattice_round_index(x, lattice));
}

// ---------------------------------------------------------------------------
// Net

static Vec jittered_point(int n, double eps_base, double jitter, std::uint64_t seed,
                          const Eigen::VectorXi& idx) {
    Vec p(n);
    for (int i = 0; i < n; ++i) p[i] = eps_base * idx[i];
    if (jitter > 0) {
        SplitMix64 rng(hash_ints(seed, idx));
        p += rng.ball_vector(n, jitter);
    }
    return p;
}

Net Net::generate(int n, double eps_base, double delta, double jitter, std::uint64_t seed,
                  const Box& box, bool materialize) {
    if (n < 1) throw ConfigError("net dimension must be >= 1");
    if (!(eps_base > 0)) throw ConfigError("net eps_base must be positive");
    if (jitter < 0) throw ConfigError("net jitter must be nonnegative");
    if (box.dimension() != n) throw ConfigError("net box dimension mismatch");
    double covering = eps_base * std::sqrt(static_cast<double>(n)) / 2.0 + jitter;
    if (!(covering < delta))
        throw ConfigError("net covering precondition violated: eps_base*sqrt(n)/2 + jitter = " +
                          std::to_string(covering) + " is not < delta = " + std::to_string(delta));
    Net net;
    net.n_ = n;
    net.delta_ = delta;
    net.box_ = box;
    net.generated_ = true;
    net.eps_base_ = eps_base;
    net.jitter_ = jitter;
    net.seed_ = seed;
    net.materialized_ = materialize;
    if (materialize) {
        Eigen::VectorXi lo(n), hi(n);
        double count = 1;
        for (int i = 0; i < n; ++i) {
            lo[i] = static_cast<int>(std::ceil(box.lo[i] / eps_base - 1e-12));
            hi[i] = static_cast<int>(std::floor(box.hi[i] / eps_base + 1e-12));
            if (hi[i] < lo[i]) throw ConfigError("net box contains no lattice points on axis " +
                                                 std::to_string(i));
            count *= hi[i] - lo[i] + 1;
        }
        if (count > 2.5e7)
            throw ConfigError("materialized net would hold " + std::to_string((long)count) +
                              " points; use procedural mode");
        Eigen::VectorXi idx = lo;
        while (true) {
            net.points_.push_back(jittered_point(n, eps_base, jitter, seed, idx));
            int axis = 0;
            while (axis < n) {
                if (++idx[axis] <= hi[axis]) break;
                idx[axis] = lo[axis];
                ++axis;
            }
            if (axis == n) break;
        }
        net.build_grid();
    }
    return net;
}

Net Net::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open net file: " + path);
    Net net;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("net file is empty: " + path);
    {
        std::istringstream head(line);
        if (!(head >> net.n_ >> net.delta_) || net.n_ < 1 || !(net.delta_ > 0))
            throw ConfigError("net file header must be 'n delta': " + path);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        Vec p(net.n_);
        for (int i = 0; i < net.n_; ++i)
            if (!(row >> p[i]))
                throw ConfigError("net file row with fewer than n coordinates: " + path);
        net.points_.push_back(p);
    }
    if (net.points_.empty()) throw ConfigError("net file has no points: " + path);
    net.box_.lo = net.points_[0];
    net.box_.hi = net.points_[0];
    for (const Vec& p : net.points_) {
        net.box_.lo = net.box_.lo.cwiseMin(p);
        net.box_.hi = net.box_.hi.cwiseMax(p);
    }
    net.materialized_ = true;
    net.generated_ = false;
    net.build_grid();
    return net;
}

void Net::save(const std::string& path) const {
    if (!materialized_) throw ConfigError("cannot save a procedural net");
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write net file: " + path);
    out.precision(17);
    out << n_ << " " << delta_ << "\n";
    for (const Vec& p : points_) {
        for (int i = 0; i < n_; ++i) out << (i ? " " : "") << p[i];
        out << "\n";
    }
}

const std::vector<Vec>& Net::points() const {
    if (!materialized_) throw std::logic_error("procedural net has no materialized point list");
    return points_;
}

Vec Net::generated_point(const Eigen::VectorXi& index) const {
    if (!generated_) throw std::logic_error("net was not generated from a lattice");
    return jittered_point(n_, eps_base_, jitter_, seed_, index);
}

void Net::build_grid() {
    cell_ = std::max(delta_, 1e-9);
    grid_.clear();
    Eigen::VectorXi c(n_);
    for (std::size_t i = 0; i < points_.size(); ++i) {
        for (int k = 0; k < n_; ++k) c[k] = static_cast<int>(std::floor(points_[i][k] / cell_));
        grid_[cell_key(c)].push_back(static_cast<int>(i));
    }
}

Vec Net::nearest(const Vec& x) const {
    if (static_cast<int>(x.size()) != n_) throw std::domain_error("net query dimension mismatch");
    if (!box_.contains(x))
        throw CoverageError("net query outside the guaranteed-coverage region");
    const Vec* best = nullptr;
    Vec best_store;
    double best_d2 = std::numeric_limits<double>::infinity();
    auto consider = [&](const Vec& p) {
        double d2 = (p - x).squaredNorm();
        if (d2 < best_d2 || (d2 == best_d2 && best && lex_less(p, *best))) {
            best_store = p;
            best = &best_store;
            best_d2 = d2;
        }
    };
    if (!materialized_) {
        int reach = static_cast<int>(
            std::ceil(std::sqrt(static_cast<double>(n_)) / 2.0 + 2.0 * jitter_ / eps_base_));
        Eigen::VectorXi center(n_), lo(n_), hi(n_), idx(n_);
        for (int i = 0; i < n_; ++i) {
            center[i] = static_cast<int>(std::llround(x[i] / eps_base_));
            int ilo = static_cast<int>(std::ceil(box_.lo[i] / eps_base_ - 1e-12));
            int ihi = static_cast<int>(std::floor(box_.hi[i] / eps_base_ + 1e-12));
            lo[i] = std::max(center[i] - reach, ilo);
            hi[i] = std::min(center[i] + reach, ihi);
            if (hi[i] < lo[i]) throw CoverageError("net query outside lattice index range");
        }
        idx = lo;
        while (true) {
            consider(jittered_point(n_, eps_base_, jitter_, seed_, idx));
            int axis = 0;
            while (axis < n_) {
                if (++idx[axis] <= hi[axis]) break;
                idx[axis] = lo[axis];
                ++axis;
            }
            if (axis == n_) break;
        }
    } else {
        Eigen::VectorXi base(n_), idx(n_);
        for (int i = 0; i < n_; ++i) base[i] = static_cast<int>(std::floor(x[i] / cell_));
        for (int ring = 1; ring <= 2 && !best; ++ring) {
            idx.setConstant(-ring);
            while (true) {
                Eigen::VectorXi c = base + idx;
                auto it = grid_.find(cell_key(c));
                if (it != grid_.end())
                    for (int pi : it->second) consider(points_[pi]);
                int axis = 0;
                while (axis < n_) {
                    if (++idx[axis] <= ring) break;
                    idx[axis] = -ring;
                    ++axis;
                }
                if (axis == n_) break;
            }
        }
    }
    if (!best || std::sqrt(best_d2) >= delta_)
        throw CoverageError("no net point within delta of the queried point");
    return best_store;
}

double Net::rounding_gap(const Vec& x) const { return (nearest(x) - x).norm(); }

std::vector<Vec> Net::neighbors(const Vec& x, double radius) const {
    std::vector<Vec> out;
    double r2 = radius * radius;
    if (!materialized_) {
        Eigen::VectorXi lo(n_), hi(n_), idx(n_);
        for (int i = 0; i < n_; ++i) {
            int ilo = static_cast<int>(std::ceil(box_.lo[i] / eps_base_ - 1e-12));
            int ihi = static_cast<int>(std::floor(box_.hi[i] / eps_base_ + 1e-12));
            lo[i] = std::max(static_cast<int>(std::floor((x[i] - radius - jitter_) / eps_base_)), ilo);
            hi[i] = std::min(static_cast<int>(std::ceil((x[i] + radius + jitter_) / eps_base_)), ihi);
            if (hi[i] < lo[i]) return out;
        }
        idx = lo;
        while (true) {
            Vec p = jittered_point(n_, eps_base_, jitter_, seed_, idx);
            if ((p - x).squaredNorm() <= r2) out.push_back(p);
            int axis = 0;
            while (axis < n_) {
                if (++idx[axis] <= hi[axis]) break;
                idx[axis] = lo[axis];
                ++axis;
            }
            if (axis == n_) break;
        }
    } else {
        Eigen::VectorXi lo(n_), hi(n_), idx(n_);
        for (int i = 0; i < n_; ++i) {
            lo[i] = static_cast<int>(std::floor((x[i] - radius) / cell_));
            hi[i] = static_cast<int>(std::floor((x[i] + radius) / cell_));
        }
        idx = lo;
        while (true) {
            auto it = grid_.find(cell_key(idx));
            if (it != grid_.end())
                for (int pi : it->second)
                    if ((points_[pi] - x).squaredNorm() <= r2) out.push_back(points_[pi]);
            int axis = 0;
            while (axis < n_) {
                if (++idx[axis] <= hi[axis]) break;
                idx[axis] = lo[axis];
                ++axis;
            }
            if (axis == n_) break;
        }
    }
    std::sort(out.begin(), out.end(), lex_less);
    return out;
}

// ---------------------------------------------------------------------------
// Embedding

std::size_t Embedding::VecKeyHash::operator()(const VecKey& k) const {
    std::uint64_t h = 0x9ddfea08eb382d69ull;
    for (double d : k.v) {
        double c = canonical_zero(d);
        std::uint64_t bits;
        std::memcpy(&bits, &c, 8);
        h = hash_mix(h, bits);
    }
    return static_cast<std::size_t>(h);
}

Embedding Embedding::pullback(std::shared_ptr<const MetricField> metric) {
    if (!metric->has_pullback())
        throw ConfigError("pullback embedding requires a pullback metric family");
    Embedding e;
    e.mode_ = Mode::Pullback;
    e.metric_ = std::move(metric);
    return e;
}

Embedding Embedding::identity() {
    Embedding e;
    e.mode_ = Mode::Identity;
    return e;
}

Embedding Embedding::load_table(const std::string& path, int n) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open embedding table: " + path);
    Embedding e;
    e.mode_ = Mode::Table;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        VecKey key;
        key.v.resize(n);
        Vec img(n);
        for (int i = 0; i < n; ++i)
            if (!(row >> key.v[i])) throw ConfigError("embedding table row too short: " + path);
        for (int i = 0; i < n; ++i)
            if (!(row >> img[i])) throw ConfigError("embedding table row too short: " + path);
        for (double& d : key.v) d = canonical_zero(d);
        e.table_[key] = img;
    }
    if (e.table_.empty()) throw ConfigError("embedding table is empty: " + path);
    return e;
}

Vec Embedding::operator()(const Vec& net_point) const {
    switch (mode_) {
        case Mode::Pullback:
            return metric_->pullback_inverse(net_point);
        case Mode::Identity:
            return net_point;
        case Mode::Table: {
            VecKey key;
            key.v.assign(net_point.data(), net_point.data() + net_point.size());
            for (double& d : key.v) d = canonical_zero(d);
            auto it = table_.find(key);
            if (it == table_.end())
                throw std::out_of_range("embedding table has no entry for queried net point");
            return it->second;
        }
    }
    throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Distortion audit

DistortionReport distortion_audit(const Net& net, const MetricField& metric,
                                  const Embedding& iota, long pair_budget, std::uint64_t seed,
                                  double sample_radius, int threads) {
    std::vector<std::pair<Vec, Vec>> pairs;
    if (!net.procedural()) {
        // restrict the audited region; distortion already shows at small scales
        std::vector<const Vec*> pts;
        for (const Vec& p : net.points())
            if (p.lpNorm<Eigen::Infinity>() <= sample_radius) pts.push_back(&p);
        if (pts.size() < 2)
            for (const Vec& p : net.points()) pts.push_back(&p);
        long all = static_cast<long>(pts.size()) * (static_cast<long>(pts.size()) - 1) / 2;
        if (all <= pair_budget) {
            for (std::size_t i = 0; i < pts.size(); ++i)
                for (std::size_t j = i + 1; j < pts.size(); ++j)
                    pairs.emplace_back(*pts[i], *pts[j]);
        } else {
            for (long s = 0; s < pair_budget; ++s) {
                SplitMix64 rng(hash_mix(seed, static_cast<std::uint64_t>(s)));
                std::size_t a = static_cast<std::size_t>(rng.next() % pts.size());
                std::size_t b = a;
                while (b == a) b = static_cast<std::size_t>(rng.next() % pts.size());
                pairs.emplace_back(*pts[a], *pts[b]);
            }
        }
    } else {
        const int n = net.dimension();
        double r = std::min(sample_radius, net.box().hi.minCoeff());
        int m = static_cast<int>(std::floor(r / net.eps_base()));
        for (long s = 0; s < pair_budget; ++s) {
            SplitMix64 rng(hash_mix(seed, static_cast<std::uint64_t>(s)));
            Eigen::VectorXi ia(n), ib(n);
            for (int i = 0; i < n; ++i) {
                ia[i] = static_cast<int>(rng.next() % (2 * m + 1)) - m;
                ib[i] = static_cast<int>(rng.next() % (2 * m + 1)) - m;
            }
            if ((ia.array() == ib.array()).all()) continue;
            pairs.emplace_back(net.generated_point(ia), net.generated_point(ib));
        }
    }

    std::vector<double> distortions(pairs.size());
    parallel_for(
        pairs.size(),
        [&](std::size_t i) {
            const auto& [p, q] = pairs[i];
            double d = distance(metric, iota(p), iota(q));
            distortions[i] = std::abs(d - (p - q).norm());
        },
        threads);

    DistortionReport report;
    report.pairs = static_cast<long>(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i)
        if (distortions[i] > report.max_distortion) {
            report.max_distortion = distortions[i];
            report.worst_p = pairs[i].first;
            report.worst_q = pairs[i].second;
        }
    return report;
}

}  // namespace netembed
