#include "netembed/directions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "netembed/icosphere.hpp"
#include "netembed/parallel.hpp"

namespace netembed {

namespace {

void check_unit(const Vec& v, const char* name) {
    if (std::abs(v.norm() - 1.0) > 1e-9)
        throw std::invalid_argument(std::string(name) + " must be a unit vector");
}

double metric_angle(const MetricField& m, const Vec& at, const Vec& a, const Vec& b) {
    return std::acos(std::clamp(m.metric_dot(at, a, b), -1.0, 1.0));
}

}  // namespace

GlobalGeodesic global_geodesic(const DirectionContext& ctx, const Vec& p, const Vec& v,
                               const DriftParams& params) {
    check_unit(v, "global direction");
    if (!(params.m_start > 0)) throw std::invalid_argument("drift schedule needs m_start > 0");
    if (!(params.growth > 1)) throw std::invalid_argument("drift schedule needs growth > 1");

    const MetricField& metric = *ctx.metric;
    const Net& net = ctx.rounding->net();
    Vec base_image = (*ctx.embedding)(p);

    GlobalGeodesic out;
    out.base = p;
    out.direction = v;

    double r = params.m_start;
    Vec prev_tangent;
    for (int term = 0; term < params.max_terms; ++term, r *= params.growth) {
        Vec target = r * v;
        if (!net.box().contains(target)) break;  // coverage exhausted
        Vec drift = (*ctx.rounding)(target);
        Vec drift_image = (*ctx.embedding)(drift);
        GeodesicPath segment;
        try {
            segment = geodesic_bvp(metric, base_image, drift_image);
        } catch (const BvpError& e) {
            throw BvpError(std::string("global geodesic segment to radius ") + std::to_string(r) +
                               " failed: " + e.what(),
                           e.last_residual);
        }
        if (segment.speed <= 0)
            throw std::domain_error("global geodesic: drift point coincides with the base");
        GlobalGeodesic::TraceEntry entry;
        entry.radius = r;
        entry.drift_point = drift;
        entry.tangent = segment.initial_velocity() / segment.speed;
        if (prev_tangent.size() == 0) {
            entry.gap = std::numeric_limits<double>::quiet_NaN();
        } else {
            Vec diff = entry.tangent - prev_tangent;
            entry.gap = metric.metric_norm(base_image, diff);
        }
        prev_tangent = entry.tangent;
        out.trace.push_back(std::move(entry));
        if (out.trace.size() >= 2 && out.trace.back().gap < params.tol) {
            out.converged = true;
            break;
        }
    }
    if (out.trace.empty())
        throw CoverageError("global geodesic: no drift radius fits inside the net box");
    out.tangent = out.trace.back().tangent;
    out.final_gap = out.trace.size() >= 2 ? out.trace.back().gap
                                          : std::numeric_limits<double>::infinity();
    if (out.trace.size() >= 2 && out.final_gap < params.tol) out.converged = true;
    return out;
}

DirectionTable local_direction_map(const DirectionContext& ctx, const Vec& p, long resolution,
                                   const DriftParams& params, int threads) {
    const int n = ctx.metric->dimension();
    std::vector<Vec> grid;
    std::vector<int> antipode;
    if (n == 2) {
        if (resolution < 8) throw std::invalid_argument("direction grid needs >= 8 points for n = 2");
        long m = resolution + (resolution % 2);
        grid.resize(m);
        antipode.resize(m);
        for (long k = 0; k < m / 2; ++k) {
            double t = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(m);
            Vec v(2);
            v << std::cos(t), std::sin(t);
            grid[k] = v;
            grid[k + m / 2] = -v;
            antipode[k] = static_cast<int>(k + m / 2);
            antipode[k + m / 2] = static_cast<int>(k);
        }
    } else if (n == 3) {
        if (resolution < 42)
            throw std::invalid_argument("direction grid needs >= 42 points for n = 3");
        int level = 1;
        while (Icosphere::vertex_count(level) < resolution) ++level;
        Icosphere ico = Icosphere::subdivided(level);
        grid.resize(ico.vertices.size());
        antipode.resize(ico.vertices.size());
        for (std::size_t i = 0; i < ico.vertices.size(); ++i) {
            Vec v(3);
            v << ico.vertices[i][0], ico.vertices[i][1], ico.vertices[i][2];
            grid[i] = v;
            antipode[i] = ico.antipode(static_cast<int>(i));
        }
    } else {
        throw std::invalid_argument("direction grids are implemented for n = 2 and n = 3");
    }

    DirectionTable table;
    table.entries.resize(grid.size());
    parallel_for(
        grid.size(),
        [&](std::size_t i) {
            GlobalGeodesic g = global_geodesic(ctx, p, grid[i], params);
            DirectionEntry e;
            e.direction = grid[i];
            e.tangent = g.tangent;
            e.final_gap = g.final_gap;
            e.terms = static_cast<int>(g.trace.size());
            table.entries[i] = std::move(e);
        },
        threads);

    Vec base_image = (*ctx.embedding)(p);
    table.max_oddness = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Vec sum = table.entries[i].tangent + table.entries[antipode[i]].tangent;
        table.entries[i].oddness = ctx.metric->metric_norm(base_image, sum);
        table.max_oddness = std::max(table.max_oddness, table.entries[i].oddness);
    }

    table.min_separation = std::numeric_limits<double>::infinity();
    table.grid_spacing = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = i + 1; j < grid.size(); ++j) {
            table.grid_spacing = std::min(
                table.grid_spacing, std::acos(std::clamp(grid[i].dot(grid[j]), -1.0, 1.0)));
            table.min_separation =
                std::min(table.min_separation,
                         metric_angle(*ctx.metric, base_image, table.entries[i].tangent,
                                      table.entries[j].tangent));
        }
    return table;
}

InjectivityReport injectivity_experiment(const DirectionContext& ctx, const Vec& p, const Vec& u,
                                         const Vec& v, const DriftParams& params) {
    check_unit(u, "direction u");
    check_unit(v, "direction v");
    double angle = std::acos(std::clamp(u.dot(v), -1.0, 1.0));
    if (angle < 1e-9)
        throw std::invalid_argument("injectivity experiment requires two distinct directions");

    InjectivityReport report;
    report.base = p;
    report.u = u;
    report.v = v;

    // the bisector maximizes min(<w,u>, <w,v>) at cos(angle/2); keep a 0.01
    // margin and snap down to a multiple of 0.05 so the probe time lands on a
    // round value
    double raw = 1.0 - std::cos(angle / 2.0) - 0.01;
    report.eps_gap = std::floor(raw / 0.05) * 0.05;
    if (!(report.eps_gap > 0))
        throw std::invalid_argument("directions are too close for a separation gap");

    const Net& net = ctx.rounding->net();
    const int n = net.dimension();
    report.delta_tilde = 2.0 * net.delta() * n;
    report.probe_time = 6.0 * report.delta_tilde / report.eps_gap;

    GlobalGeodesic gamma = global_geodesic(ctx, p, v, params);
    Vec base_image = (*ctx.embedding)(p);
    report.gamma_probe =
        geodesic_ivp(*ctx.metric, base_image, gamma.tangent, report.probe_time).endpoint();

    // net points near gamma(T): search around the source-space preimage
    Vec center = ctx.metric->has_pullback() ? ctx.metric->pullback(report.gamma_probe)
                                            : report.gamma_probe;
    double search = 2.0 * report.delta_tilde;
    std::vector<Vec> candidates = net.neighbors(center, search);
    std::sort(candidates.begin(), candidates.end(), [&](const Vec& a, const Vec& b) {
        return (a - center).squaredNorm() < (b - center).squaredNorm();
    });
    double ratio = ctx.metric->has_pullback() ? ctx.metric->chart_ratio_upper() : 2.0;
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& q : candidates) {
        if ((q - center).norm() / ratio >= best) break;  // lower bound already beats it
        double d = distance(*ctx.metric, (*ctx.embedding)(q), report.gamma_probe);
        if (d < best) {
            best = d;
            report.witness = q;
        }
    }
    report.witness_gap = best;
    report.witness_found = best < report.delta_tilde;
    if (!report.witness_found) return report;  // net-property violation, reported not thrown

    report.pq_norm = (report.witness - p).norm();
    report.bracket_ok = (report.probe_time - report.delta_tilde < report.pq_norm) &&
                        (report.pq_norm < report.probe_time + report.delta_tilde);

    Vec qp = (report.witness - p) / report.pq_norm;
    double cu = qp.dot(u), cv = qp.dot(v);
    report.chosen_direction = cu <= cv ? u : v;
    report.qp_inner = std::min(cu, cv);

    GlobalGeodesic drift = global_geodesic(ctx, p, report.chosen_direction, params);
    report.drift_ok = true;
    bool any = false;
    for (const auto& entry : drift.trace) {
        double inner = qp.dot((entry.drift_point - p).normalized());
        report.drift_inner.push_back(inner);
        if ((entry.drift_point - p).norm() > report.probe_time) {
            any = true;
            if (!(inner < 1.0 - report.eps_gap)) report.drift_ok = false;
        }
    }
    if (!any) report.drift_ok = false;  // no term passed the probe distance
    return report;
}

}  // namespace netembed
