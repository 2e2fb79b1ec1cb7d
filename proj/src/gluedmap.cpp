#include "netembed/gluedmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "netembed/parallel.hpp"
#include "netembed/rng.hpp"

namespace netembed {

namespace {

double signed_angle(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
}

Eigen::Vector2d on_circle(double t) { return {std::cos(t), std::sin(t)}; }

}  // namespace

// ---------------------------------------------------------------------------
// Degree of sampled sphere maps

int circle_degree(const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& f,
                  long resolution, int threads, double* min_antipodal_gap, long* samples_used) {
    long m = std::max<long>(8, resolution);
    if (m % 2) ++m;
    std::vector<Eigen::Vector2d> dirs(m), images(m);
    for (long k = 0; k < m / 2; ++k) {
        dirs[k] = on_circle(2.0 * M_PI * static_cast<double>(k) / static_cast<double>(m));
        dirs[k + m / 2] = -dirs[k];  // exact antipodal pairing
    }
    parallel_for(m, [&](std::size_t k) { images[k] = f(dirs[k]).normalized(); }, threads);

    if (min_antipodal_gap) {
        double gap = std::numeric_limits<double>::infinity();
        for (long k = 0; k < m / 2; ++k)
            gap = std::min(gap, std::acos(std::clamp(images[k].dot(images[k + m / 2]), -1.0, 1.0)));
        *min_antipodal_gap = gap;
    }

    long evals = m;
    const long budget = 40 * m;
    double total = 0.0;
    // refine until each step turns by at most pi/4
    std::function<double(double, double, const Eigen::Vector2d&, const Eigen::Vector2d&, int)>
        walk = [&](double ta, double tb, const Eigen::Vector2d& wa, const Eigen::Vector2d& wb,
                   int depth) -> double {
        double step = signed_angle(wa, wb);
        if (std::abs(step) <= M_PI / 4.0) return step;
        if (depth > 40 || ++evals > budget)
            throw ResolutionError("circle degree: refinement budget exhausted");
        double tm = 0.5 * (ta + tb);
        Eigen::Vector2d wm = f(on_circle(tm)).normalized();
        return walk(ta, tm, wa, wm, depth + 1) + walk(tm, tb, wm, wb, depth + 1);
    };
    for (long k = 0; k < m; ++k) {
        double ta = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(m);
        double tb = 2.0 * M_PI * static_cast<double>(k + 1) / static_cast<double>(m);
        total += walk(ta, tb, images[k], images[(k + 1) % m], 0);
    }
    if (samples_used) *samples_used = evals;
    double winding = total / (2.0 * M_PI);
    int degree = static_cast<int>(std::lround(winding));
    if (std::abs(winding - degree) > 0.05)
        throw DegeneracyError("circle degree: accumulated angle is not close to an integer");
    return degree;
}

int sphere_degree(const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& f, int level,
                  std::uint64_t seed, int threads, double* min_antipodal_gap, long* samples_used) {
    Icosphere ico = Icosphere::subdivided(level);
    const long nv = static_cast<long>(ico.vertices.size());
    std::vector<Eigen::Vector3d> images(nv);
    parallel_for(nv, [&](std::size_t i) { images[i] = f(ico.vertices[i]).normalized(); }, threads);
    if (samples_used) *samples_used = nv;

    if (min_antipodal_gap) {
        double gap = std::numeric_limits<double>::infinity();
        for (long i = 0; i < nv; ++i) {
            int j = ico.antipode(static_cast<int>(i));
            gap = std::min(gap, std::acos(std::clamp(images[i].dot(images[j]), -1.0, 1.0)));
        }
        *min_antipodal_gap = gap;
    }

    const double margin = 1e-3;
    for (int draw = 0; draw < 16; ++draw) {
        SplitMix64 rng(hash_mix(seed ^ 0x9d2c5680936d4e2full, static_cast<std::uint64_t>(draw)));
        Eigen::Vector3d z;
        {
            Vec zv = rng.unit_vector(3);
            z = Eigen::Vector3d(zv[0], zv[1], zv[2]);
        }
        bool ambiguous = false;
        long degree = 0;
        for (const auto& face : ico.faces) {
            const Eigen::Vector3d& wa = images[face[0]];
            const Eigen::Vector3d& wb = images[face[1]];
            const Eigen::Vector3d& wc = images[face[2]];
            double det = wa.dot(wb.cross(wc));
            // distance of z from the three boundary great circles, signed toward
            // the inside of the oriented image triangle
            Eigen::Vector3d nab = wa.cross(wb), nbc = wb.cross(wc), nca = wc.cross(wa);
            double lab = nab.norm(), lbc = nbc.norm(), lca = nca.norm();
            if (std::abs(det) < 1e-12) {
                // degenerate image triangle covers nothing, unless z is too close to tell
                double clearance = std::numeric_limits<double>::infinity();
                if (lab > 1e-12) clearance = std::min(clearance, std::abs(z.dot(nab)) / lab);
                if (lbc > 1e-12) clearance = std::min(clearance, std::abs(z.dot(nbc)) / lbc);
                if (lca > 1e-12) clearance = std::min(clearance, std::abs(z.dot(nca)) / lca);
                if (clearance < margin) {
                    ambiguous = true;
                    break;
                }
                continue;
            }
            double sign = det > 0 ? 1.0 : -1.0;
            double sab = sign * z.dot(nab) / lab;
            double sbc = sign * z.dot(nbc) / lbc;
            double sca = sign * z.dot(nca) / lca;
            double smin = std::min({sab, sbc, sca});
            if (smin > margin) {
                degree += det > 0 ? 1 : -1;
            } else if (smin > -margin) {
                ambiguous = true;  // z within the margin band of this triangle
                break;
            }
        }
        if (!ambiguous) return static_cast<int>(degree);
    }
    throw DegeneracyError("sphere degree: no regular direction found in 16 draws");
}

// ---------------------------------------------------------------------------
// GluedMap

GluedMap::GluedMap(std::shared_ptr<const SimplexMapEvaluator> evaluator)
    : evaluator_(std::move(evaluator)), n_(evaluator_->metric().dimension()) {
    Eigen::VectorXi origin = Eigen::VectorXi::Zero(n_);
    origin_image_ = evaluator_->vertex_image(origin);
    Eigen::SelfAdjointEigenSolver<Mat> es(evaluator_->metric().metric(origin_image_));
    if (es.info() != Eigen::Success)
        throw std::runtime_error("glued map: metric eigendecomposition failed at the basepoint");
    sphere_identification_ = es.operatorSqrt();
}

double GluedMap::delta() const { return evaluator_->rounding().net().delta(); }

double GluedMap::offset_radius() const {
    double eps = epsilon(), d = delta(), n = n_;
    return (eps + 2.0 * d) * n + 1.5 * eps * std::sqrt(n) + 4.0 * d;
}

double GluedMap::separation_radius() const {
    double eps = epsilon(), d = delta(), n = n_;
    return 2.0 * (eps + 2.0 * d) * n + 2.5 * eps * std::sqrt(n) + 7.0 * d;
}

Vec GluedMap::operator()(const Vec& x) const {
    return evaluator_->evaluate(locate(x, epsilon()));
}

RoundPreservingReport GluedMap::verify_round_preserving(const Vec& x) const {
    BarycentricPoint bp = locate(x, epsilon());
    RoundPreservingReport report;
    report.anchor = bp.simplex.anchor;

    double worst_gap = 0.0;
    Eigen::VectorXi offset = Eigen::VectorXi::Zero(n_);
    while (true) {
        Eigen::VectorXi vertex = report.anchor + offset;
        Vec chart(n_);
        for (int i = 0; i < n_; ++i) chart[i] = epsilon() * vertex[i];
        worst_gap = std::max(worst_gap, evaluator_->rounding().gap(chart));
        int axis = 0;
        while (axis < n_) {
            if (++offset[axis] <= 1) break;
            offset[axis] = 0;
            ++axis;
        }
        if (axis == n_) break;
    }
    report.bound = n_ * (epsilon() + 2.0 * worst_gap);

    Vec anchor_image = evaluator_->vertex_image(report.anchor);
    Vec value = evaluator_->evaluate(bp);
    report.observed = distance(evaluator_->metric(), value, anchor_image);
    report.slack = report.bound - report.observed;
    return report;
}

OriginBoundReport GluedMap::verify_origin_bound(const Vec& x) const {
    OriginBoundReport report;
    report.norm_x = x.norm();
    report.origin_distance = distance(evaluator_->metric(), (*this)(x), origin_image_);
    report.slack = report.origin_distance + offset_radius() - report.norm_x;
    return report;
}

TangentVector GluedMap::radial(const Vec& chart_point) const {
    return radial_projection(evaluator_->metric(), origin_image_, chart_point);
}

Vec GluedMap::sphere_coords(const TangentVector& w) const {
    Vec s = sphere_identification_ * w.components;
    return s / s.norm();
}

AntipodalReport GluedMap::antipodal_check(double radius, long pairs, int threads,
                                          bool keep_details) const {
    if (pairs < 1) throw std::invalid_argument("antipodal check: need at least one pair");
    AntipodalReport report;
    report.radius = radius;
    report.below_separation_radius = radius < separation_radius();
    report.samples = pairs;

    std::vector<AntipodalSample> samples(pairs);
    const MetricField& metric = evaluator_->metric();
    parallel_for(
        static_cast<std::size_t>(pairs),
        [&](std::size_t k) {
            Vec v;
            if (n_ == 2) {
                double t = M_PI * static_cast<double>(k) / static_cast<double>(pairs);
                v = Vec(2);
                v << std::cos(t), std::sin(t);
            } else {
                SplitMix64 rng(hash_mix(0x5851f42d4c957f2dull, static_cast<std::uint64_t>(k)));
                v = rng.unit_vector(n_);
            }
            Vec a = (*this)(radius * v);
            Vec b = (*this)(-radius * v);
            GeodesicPath pa = geodesic_bvp(metric, origin_image_, a);
            GeodesicPath pb = geodesic_bvp(metric, origin_image_, b);
            if (pa.speed <= 1e-9 || pb.speed <= 1e-9)
                throw std::domain_error("antipodal check: image hit the basepoint");
            Vec wa = pa.initial_velocity() / pa.speed;
            Vec wb = pb.initial_velocity() / pb.speed;
            double cosang =
                std::clamp(metric.metric_dot(origin_image_, wa, wb), -1.0, 1.0);
            AntipodalSample s;
            s.direction = v;
            s.angle = std::acos(cosang);
            s.radial_gap = std::abs(pa.length() - pb.length());
            s.image_distance = distance(metric, a, b);
            samples[k] = std::move(s);
        },
        threads);

    report.min_angle = std::numeric_limits<double>::infinity();
    report.min_distance_margin = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
        report.min_angle = std::min(report.min_angle, s.angle);
        report.min_distance_margin =
            std::min(report.min_distance_margin, s.image_distance - s.radial_gap);
    }
    if (keep_details) report.details = std::move(samples);
    return report;
}

DegreeReport GluedMap::degree(double radius, long resolution, std::uint64_t seed,
                              int threads) const {
    if (radius < offset_radius() + 1.0)
        throw std::invalid_argument("degree: radius must be at least offset_radius + 1");
    DegreeReport report;
    report.radius = radius;
    report.resolution = resolution;
    report.below_separation_radius = radius < separation_radius();

    auto project = [&](const Vec& v) {
        Vec img = (*this)(radius * v);
        if ((img - origin_image_).norm() <= 1e-6)
            throw std::domain_error("degree: sampled image is too close to the basepoint");
        return sphere_coords(radial(img));
    };

    double gap = 0.0;
    long used = 0;
    if (n_ == 2) {
        auto f = [&](const Eigen::Vector2d& v) {
            Vec vv(2);
            vv << v.x(), v.y();
            Vec s = project(vv);
            return Eigen::Vector2d(s[0], s[1]);
        };
        report.degree = circle_degree(f, resolution, threads, &gap, &used);
    } else if (n_ == 3) {
        auto f = [&](const Eigen::Vector3d& v) {
            Vec vv(3);
            vv << v.x(), v.y(), v.z();
            Vec s = project(vv);
            return Eigen::Vector3d(s[0], s[1], s[2]);
        };
        report.degree = sphere_degree(f, static_cast<int>(resolution), seed, threads, &gap, &used);
    } else {
        throw std::invalid_argument("degree computation is implemented for n = 2 and n = 3");
    }
    report.min_antipodal_gap = gap;
    report.samples = used;
    return report;
}

PreimageReport GluedMap::find_preimage(const Vec& y, long simplex_budget) const {
    PreimageReport report;
    const double eps = epsilon();
    const double tol = 1e-6;

    // quick pass: nearby lattice vertices whose embedded roundings already hit y
    {
        Eigen::VectorXi base(n_);
        for (int i = 0; i < n_; ++i) base[i] = static_cast<int>(std::floor(y[i] / eps));
        Eigen::VectorXi off = Eigen::VectorXi::Constant(n_, -1);
        while (true) {
            Eigen::VectorXi idx = base + off;
            ++report.attempts;
            if ((evaluator_->vertex_image(idx) - y).norm() < tol) {
                report.found = true;
                report.preimage = Vec(n_);
                for (int i = 0; i < n_; ++i) report.preimage[i] = eps * idx[i];
                report.residual = (evaluator_->vertex_image(idx) - y).norm();
                return report;
            }
            int axis = 0;
            while (axis < n_) {
                if (++off[axis] <= 2) break;
                off[axis] = -1;
                ++axis;
            }
            if (axis == n_) break;
        }
    }

    // candidate cubes by rings around the cube containing y
    Eigen::VectorXi center(n_);
    for (int i = 0; i < n_; ++i) center[i] = static_cast<int>(std::floor(y[i] / eps));
    long tried = 0;
    int max_ring = static_cast<int>(std::ceil((y.norm() + offset_radius()) / eps)) + 1;
    for (int ring = 0; ring <= max_ring && tried < simplex_budget; ++ring) {
        Eigen::VectorXi off = Eigen::VectorXi::Constant(n_, -ring);
        while (tried < simplex_budget) {
            if (off.cwiseAbs().maxCoeff() == ring) {  // ring boundary only
                Eigen::VectorXi anchor = center + off;
                for (const KuhnSimplex& s : kuhn_simplices(anchor, eps)) {
                    if (tried >= simplex_budget) break;
                    ++tried;
                    ++report.attempts;
                    auto verts = s.vertex_indices();
                    const int k = static_cast<int>(verts.size()) - 1;
                    // damped Gauss-Newton on barycentric coordinates from the barycenter
                    Vec lambda = Vec::Constant(k + 1, 1.0 / (k + 1));
                    double mu = 1e-3;
                    Vec r = evaluator_->evaluate(verts, lambda) - y;
                    for (int iter = 0; iter < 30; ++iter) {
                        if (r.norm() < tol) break;
                        Mat jac(n_, k);
                        const double h = 1e-7;
                        for (int j = 0; j < k; ++j) {
                            Vec lp = lambda;
                            lp[j + 1] += h;
                            lp[0] -= h;
                            if (lp[0] < 0 || lp[j + 1] > 1) {
                                lp = lambda;
                                lp[j + 1] -= h;
                                lp[0] += h;
                                jac.col(j) = (r - (evaluator_->evaluate(verts, lp) - y)) / h;
                            } else {
                                jac.col(j) = (evaluator_->evaluate(verts, lp) - y - r) / h;
                            }
                        }
                        Mat normal = jac.transpose() * jac + mu * Mat::Identity(k, k);
                        Vec dt = normal.ldlt().solve(-jac.transpose() * r);
                        Vec next = lambda;
                        next.tail(k) += dt;
                        next[0] = 1.0 - next.tail(k).sum();
                        // project back onto the simplex
                        for (int j = 0; j <= k; ++j) next[j] = std::max(0.0, next[j]);
                        double sum = next.sum();
                        if (sum <= 0) break;
                        next /= sum;
                        Vec rn = evaluator_->evaluate(verts, next) - y;
                        if (rn.norm() < r.norm()) {
                            lambda = next;
                            r = rn;
                            mu = std::max(mu * 0.3, 1e-9);
                        } else {
                            mu *= 10.0;
                            if (mu > 1e6) break;
                        }
                    }
                    if (r.norm() < tol) {
                        report.found = true;
                        report.residual = r.norm();
                        Vec x = Vec::Zero(n_);
                        auto chart = s.sorted_vertices();
                        for (int j = 0; j <= k; ++j) x += lambda[j] * chart[j];
                        report.preimage = x;
                        return report;
                    }
                }
            }
            int axis = 0;
            while (axis < n_) {
                if (++off[axis] <= ring) break;
                off[axis] = -ring;
                ++axis;
            }
            if (axis == n_) break;
        }
    }
    return report;
}

}  // namespace netembed
