#include "netembed/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "netembed/parallel.hpp"
#include "netembed/rng.hpp"

namespace netembed {

namespace {

using json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& value) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        std::size_t used = 0;
        double d = std::stod(item, &used);
        if (used != item.size()) throw ConfigError("malformed number in list: '" + item + "'");
        out.push_back(d);
    }
    return out;
}

Vec to_vec(const std::vector<double>& v) {
    Vec out(static_cast<int>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string vec_str(const Vec& v) {
    std::string s;
    for (int i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += fmt(v[i]);
    }
    return s;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

CheckResult make_check(std::string name, double threshold, double statistic, double margin,
                       long samples, bool pass, std::string note = "") {
    CheckResult c;
    c.name = std::move(name);
    c.bound = threshold;
    c.worst = statistic;
    c.slack = margin;
    c.samples = samples;
    c.pass = pass;
    c.note = std::move(note);
    return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Scenario

double Scenario::derived_offset_radius() const {
    double eps = lattice_epsilon, n = dimension;
    return (eps + 2.0 * delta) * n + 1.5 * eps * std::sqrt(n) + 4.0 * delta;
}

double Scenario::derived_separation_radius() const {
    double eps = lattice_epsilon, n = dimension;
    return 2.0 * (eps + 2.0 * delta) * n + 2.5 * eps * std::sqrt(n) + 7.0 * delta;
}

double Scenario::derived_probe_time() const {
    if (experiment_u.size() == 0 || experiment_v.size() == 0) return 0.0;
    double angle = std::acos(std::clamp(experiment_u.dot(experiment_v), -1.0, 1.0));
    double eps_gap = std::floor((1.0 - std::cos(angle / 2.0) - 0.01) / 0.05) * 0.05;
    if (!(eps_gap > 0)) return 0.0;
    return 6.0 * derived_covering_bound() / eps_gap;
}

double Scenario::margin() const {
    return std::max(derived_separation_radius(), derived_probe_time()) +
           lattice_epsilon * std::sqrt(static_cast<double>(dimension));
}

// ---------------------------------------------------------------------------
// Configuration loading

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "scenario.name", "scenario.dimension",
        "metric.family", "metric.matrix", "metric.amplitudes", "metric.frequencies",
        "metric.conformal",
        "net.epsilon_base", "net.delta", "net.jitter", "net.seed", "net.box_radius",
        "net.mode", "net.file", "net.embedding", "net.embedding_table",
        "lattice.epsilon",
        "verify.core_radius", "verify.round_preserving_samples", "verify.chain_bound_samples",
        "verify.chain_bound_simplices", "verify.face_consistency_faces",
        "verify.face_consistency_points", "verify.lower_bound_samples",
        "verify.surjectivity_probes", "verify.net_check_samples", "verify.audit_pairs",
        "verify.audit_threshold", "verify.audit_radius",
        "degree.winding_resolution", "degree.icosphere_level", "degree.antipodal_pairs",
        "degree.radii",
        "directions.grid_resolution", "directions.m_start", "directions.growth",
        "directions.tol", "directions.max_terms", "directions.experiment_u",
        "directions.experiment_v", "directions.base_point",
        "output.dir",
    };
    return keys;
}

}  // namespace

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file: " + path);

    std::map<std::string, std::string> kv;
    std::vector<std::string> problems;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            problems.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        std::string key = section + "." + trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (!known_keys().count(key)) {
            problems.push_back("unknown key '" + key + "'");
            continue;
        }
        kv[key] = value;
    }

    auto require = [&](const std::string& key) -> std::string {
        auto it = kv.find(key);
        if (it == kv.end()) {
            problems.push_back("missing required key '" + key + "'");
            return "";
        }
        return it->second;
    };
    auto optional = [&](const std::string& key, const std::string& fallback) {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second;
    };

    Scenario s;
    s.name = require("scenario.name");
    std::string dim = require("scenario.dimension");
    std::string family = require("metric.family");
    bool net_from_file = kv.count("net.file") > 0;
    std::string delta = net_from_file ? optional("net.delta", "") : require("net.delta");
    std::string eps_base = net_from_file ? "" : require("net.epsilon_base");
    std::string lattice_eps = require("lattice.epsilon");
    std::string box_radius = net_from_file ? "" : require("net.box_radius");

    if (!problems.empty()) {
        std::string msg = "scenario configuration errors in " + path + ":";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw ConfigError(msg);
    }

    try {
        s.dimension = std::stoi(dim);
        if (family == "flat") s.family = MetricFamily::Flat;
        else if (family == "linear-pullback") s.family = MetricFamily::LinearPullback;
        else if (family == "sine-pullback") s.family = MetricFamily::SinePullback;
        else if (family == "conformal") s.family = MetricFamily::Conformal;
        else throw ConfigError("unknown metric family '" + family + "'");

        if (s.family == MetricFamily::LinearPullback) {
            auto vals = parse_list(require("metric.matrix"));
            if (static_cast<int>(vals.size()) != s.dimension * s.dimension)
                throw ConfigError("metric.matrix must hold dimension^2 entries, row-major");
            s.matrix.resize(s.dimension, s.dimension);
            for (int r = 0; r < s.dimension; ++r)
                for (int c = 0; c < s.dimension; ++c) s.matrix(r, c) = vals[r * s.dimension + c];
        } else if (s.family == MetricFamily::SinePullback) {
            s.amplitudes = to_vec(parse_list(require("metric.amplitudes")));
            s.frequencies = to_vec(parse_list(require("metric.frequencies")));
        } else if (s.family == MetricFamily::Conformal) {
            s.conformal = to_vec(parse_list(require("metric.conformal")));
        }

        if (net_from_file) {
            s.net_file = kv["net.file"];
        } else {
            s.eps_base = std::stod(eps_base);
            s.delta = std::stod(delta);
            s.jitter = std::stod(optional("net.jitter", "0"));
            s.seed = static_cast<std::uint64_t>(std::stoull(optional("net.seed", "1")));
            s.box_radius = std::stod(box_radius);
        }
        s.procedural = optional("net.mode", "materialized") == "procedural";
        s.embedding_mode = optional("net.embedding", "auto");
        s.embedding_table = optional("net.embedding_table", "");
        s.lattice_epsilon = std::stod(lattice_eps);

        s.core_radius = std::stod(optional("verify.core_radius", "0"));
        s.round_preserving_samples = std::stol(optional("verify.round_preserving_samples", "10000"));
        s.chain_bound_samples = std::stol(optional("verify.chain_bound_samples", "1000"));
        s.chain_bound_simplices = std::stol(optional("verify.chain_bound_simplices", "20"));
        s.face_consistency_faces = std::stol(optional("verify.face_consistency_faces", "100"));
        s.face_consistency_points = std::stol(optional("verify.face_consistency_points", "50"));
        s.lower_bound_samples = std::stol(optional("verify.lower_bound_samples", "1000"));
        s.surjectivity_probes = std::stol(optional("verify.surjectivity_probes", "10"));
        s.net_check_samples = std::stol(optional("verify.net_check_samples", "1000"));
        s.audit_pairs = std::stol(optional("verify.audit_pairs", "2000"));
        s.audit_threshold = std::stod(optional("verify.audit_threshold", "1e-6"));
        s.audit_radius = std::stod(optional("verify.audit_radius", "10"));

        s.winding_resolution = std::stol(optional("degree.winding_resolution", "10000"));
        s.icosphere_level = std::stoi(optional("degree.icosphere_level", "4"));
        s.antipodal_pairs = std::stol(optional("degree.antipodal_pairs", "500"));
        if (kv.count("degree.radii"))
            for (double r : parse_list(kv["degree.radii"])) s.degree_radii.push_back(r);

        s.grid_resolution = std::stol(optional("directions.grid_resolution",
                                               s.dimension == 3 ? "42" : "8"));
        s.dir_m_start = std::stod(optional("directions.m_start", "0"));
        s.dir_growth = std::stod(optional("directions.growth", "2"));
        s.dir_tol = std::stod(optional("directions.tol", "1e-6"));
        s.dir_max_terms = std::stoi(optional("directions.max_terms", "12"));
        if (kv.count("directions.experiment_u"))
            s.experiment_u = to_vec(parse_list(kv["directions.experiment_u"]));
        if (kv.count("directions.experiment_v"))
            s.experiment_v = to_vec(parse_list(kv["directions.experiment_v"]));
        if (kv.count("directions.base_point"))
            s.direction_base = to_vec(parse_list(kv["directions.base_point"]));

        s.output_dir = optional("output.dir", "out");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("scenario configuration parse failure in " + path + ": " + e.what());
    }

    // cross-field preconditions, reported together
    std::vector<std::string> violations;
    if (s.dimension < 2) violations.push_back("scenario.dimension must be >= 2");
    if (s.net_file.empty()) {
        double covering = s.eps_base * std::sqrt(static_cast<double>(s.dimension)) / 2.0 + s.jitter;
        if (!(covering < s.delta))
            violations.push_back("net covering precondition: eps_base*sqrt(n)/2 + jitter = " +
                                 fmt(covering) + " must be < delta = " + fmt(s.delta));
        if (!(s.box_radius > s.margin()))
            violations.push_back("net.box_radius = " + fmt(s.box_radius) +
                                 " must exceed the core margin max(R1, T) + eps*sqrt(n) = " +
                                 fmt(s.margin()));
    }
    if (!(s.lattice_epsilon > 0)) violations.push_back("lattice.epsilon must be positive");
    if (!violations.empty()) {
        std::string msg = "scenario preconditions violated in " + path + ":";
        for (const auto& v : violations) msg += "\n  - " + v;
        throw ConfigError(msg);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Harness

bool SubcommandReport::all_pass() const {
    if (not_applicable) return false;
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

Harness::Harness(Scenario scenario, int threads, std::string output_dir,
                 std::uint64_t seed_override)
    : scenario_(std::move(scenario)), threads_(threads > 0 ? threads : default_thread_count()) {
    if (seed_override != 0) scenario_.seed = seed_override;
    out_dir_ = output_dir.empty() ? scenario_.output_dir : std::move(output_dir);

    const int n = scenario_.dimension;
    switch (scenario_.family) {
        case MetricFamily::Flat:
            metric_ = std::make_shared<MetricField>(MetricField::flat(n));
            break;
        case MetricFamily::LinearPullback:
            metric_ = std::make_shared<MetricField>(MetricField::linear_pullback(scenario_.matrix));
            break;
        case MetricFamily::SinePullback:
            metric_ = std::make_shared<MetricField>(
                MetricField::sine_pullback(scenario_.amplitudes, scenario_.frequencies));
            break;
        case MetricFamily::Conformal:
            metric_ = std::make_shared<MetricField>(MetricField::conformal(scenario_.conformal));
            break;
    }
    if (metric_->dimension() != n)
        throw ConfigError("metric parameter dimensions disagree with scenario.dimension");

    if (!scenario_.net_file.empty()) {
        net_ = std::make_shared<Net>(Net::load(scenario_.net_file));
        if (net_->dimension() != n) throw ConfigError("net file dimension mismatch");
        scenario_.delta = net_->delta();
        scenario_.box_radius = std::min(std::abs(net_->box().lo.minCoeff()),
                                        std::abs(net_->box().hi.maxCoeff()));
    } else {
        net_ = std::make_shared<Net>(Net::generate(n, scenario_.eps_base, scenario_.delta,
                                                   scenario_.jitter, scenario_.seed,
                                                   Box::centered(n, scenario_.box_radius),
                                                   !scenario_.procedural));
    }
    rounding_ = std::make_shared<NetRounding>(net_);

    std::string em = scenario_.embedding_mode;
    if (em == "auto") em = metric_->has_pullback() ? "pullback" : "identity";
    if (em == "pullback")
        embedding_ = std::make_shared<Embedding>(Embedding::pullback(metric_));
    else if (em == "identity")
        embedding_ = std::make_shared<Embedding>(Embedding::identity());
    else if (em == "table")
        embedding_ = std::make_shared<Embedding>(
            Embedding::load_table(scenario_.embedding_table, n));
    else
        throw ConfigError("unknown embedding mode '" + em + "'");

    evaluator_ = std::make_shared<SimplexMapEvaluator>(metric_, rounding_, embedding_,
                                                       scenario_.lattice_epsilon);
    map_ = std::make_shared<GluedMap>(evaluator_);
    dir_ctx_ = {metric_, rounding_, embedding_};

    double available = scenario_.box_radius - scenario_.margin();
    core_radius_ = scenario_.core_radius > 0 ? std::min(scenario_.core_radius, available)
                                             : std::min(available, 10.0);

    if (metric_->has_pullback()) {
        chart_ratio_upper_ = 1.0 / metric_->chart_ratio_lower();
    } else {
        // sampled metric eigenvalue range over the core box, doubled for safety
        double min_eig = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 64; ++i) {
            SplitMix64 rng(hash_mix(scenario_.seed ^ 0xc4ceb9fe1a85ec53ull, i));
            Vec x(n);
            for (int k = 0; k < n; ++k) x[k] = rng.uniform(-core_radius_, core_radius_);
            Eigen::SelfAdjointEigenSolver<Mat> es(metric_->metric(x));
            min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
        }
        chart_ratio_upper_ = 2.0 / std::sqrt(std::max(min_eig, 1e-12));
    }
}

Vec Harness::sample_core_point(std::uint64_t salt, std::uint64_t index) const {
    SplitMix64 rng(hash_mix(hash_mix(scenario_.seed, salt), index));
    Vec x(scenario_.dimension);
    for (int k = 0; k < scenario_.dimension; ++k) x[k] = rng.uniform(-core_radius_, core_radius_);
    return x;
}

double Harness::nearest_net_distance(const Vec& y) const {
    const double covering_bound = scenario_.derived_covering_bound();
    Vec center = metric_->has_pullback() ? metric_->pullback(y) : y;
    double radius = (covering_bound + 1.0) * (metric_->has_pullback() ? 1.0 : chart_ratio_upper_);
    std::vector<Vec> candidates = net_->neighbors(center, radius);
    if (candidates.empty()) throw CoverageError("net check: no candidates in pruning radius");
    std::sort(candidates.begin(), candidates.end(), [&](const Vec& a, const Vec& b) {
        return (a - center).squaredNorm() < (b - center).squaredNorm();
    });
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& q : candidates) {
        double lb = metric_->has_pullback() ? (q - center).norm()
                                            : ((*embedding_)(q) - y).norm() / chart_ratio_upper_;
        if (lb >= best) break;
        best = std::min(best, distance(*metric_, y, (*embedding_)(q)));
    }
    return best;
}

void Harness::write_csv(const std::string& stem, const std::string& header,
                        const std::vector<std::string>& rows) const {
    std::filesystem::create_directories(out_dir_);
    std::ofstream out(out_dir_ + "/" + scenario_.name + "_" + stem + ".csv");
    out << header << "\n";
    for (const auto& r : rows) out << r << "\n";
}

void Harness::ensure_hypothesis_checked() {
    if (!hypothesis_checked_) run_audit();
}

SubcommandReport Harness::run_audit() {
    auto start = std::chrono::steady_clock::now();
    SubcommandReport report;
    report.scenario = scenario_.name;
    report.subcommand = "audit";

    auto audit = distortion_audit(*net_, *metric_, *embedding_, scenario_.audit_pairs,
                                  scenario_.seed ^ 0xa0d1ull, scenario_.audit_radius, threads_);
    double margin = scenario_.audit_threshold - audit.max_distortion;
    std::string note;
    if (audit.max_distortion > scenario_.audit_threshold)
        note = "net isometry hypothesis violated; worst pair (" + vec_str(audit.worst_p) + ") (" +
               vec_str(audit.worst_q) + ")";
    audit_check_ = make_check("net-isometry", scenario_.audit_threshold, audit.max_distortion,
                              margin, audit.pairs, margin >= 0, note);
    report.checks.push_back(audit_check_);
    report.hypothesis_violation = !audit_check_.pass;
    hypothesis_checked_ = true;
    hypothesis_ok_ = audit_check_.pass;
    report.wall_ms = elapsed_ms(start);
    return report;
}

SubcommandReport Harness::run_phi_verify() {
    auto start = std::chrono::steady_clock::now();
    SubcommandReport report;
    report.scenario = scenario_.name;
    report.subcommand = "phi-verify";
    const double tol = 1e-7;

    // round-preserving
    {
        long n_samples = scenario_.round_preserving_samples;
        std::vector<double> slacks(n_samples);
        std::vector<std::string> rows(n_samples);
        parallel_for(
            n_samples,
            [&](std::size_t i) {
                Vec x = sample_core_point(0x1111, i);
                auto r = map_->verify_round_preserving(x);
                slacks[i] = r.slack;
                Vec phi = (*map_)(x);
                rows[i] = vec_str(x) + "," + vec_str(phi) + "," + fmt(r.bound) + "," +
                          fmt(r.observed) + "," + fmt(r.slack);
            },
            threads_);
        double worst = *std::min_element(slacks.begin(), slacks.end());
        report.checks.push_back(
            make_check("round-preserving", -tol, worst, worst + tol, n_samples, worst >= -tol));
        write_csv("round_preserving", "x,phi,bound,observed,slack", rows);
    }

    // chain bound over seeded core simplices
    {
        long per = std::max<long>(1, scenario_.chain_bound_samples / scenario_.chain_bound_simplices);
        long n_simp = scenario_.chain_bound_simplices;
        std::vector<double> slack(n_simp);
        std::vector<long> counts(n_simp);
        int reach = std::max(1, static_cast<int>(std::floor(
                                    core_radius_ / scenario_.lattice_epsilon)));
        parallel_for(
            n_simp,
            [&](std::size_t i) {
                SplitMix64 rng(hash_mix(hash_mix(scenario_.seed, 0x2222), i));
                Eigen::VectorXi anchor(scenario_.dimension);
                for (int k = 0; k < scenario_.dimension; ++k)
                    anchor[k] = static_cast<int>(rng.next() % (2 * reach)) - reach;
                auto all = kuhn_simplices(anchor, scenario_.lattice_epsilon);
                const auto& simplex = all[rng.next() % all.size()];
                auto rep = evaluator_->verify_chain_bound(simplex.vertex_indices(), per);
                slack[i] = rep.min_slack;
                counts[i] = rep.samples;
            },
            threads_);
        double worst = *std::min_element(slack.begin(), slack.end());
        long total = std::accumulate(counts.begin(), counts.end(), 0L);
        report.checks.push_back(
            make_check("chain-bound", -tol, worst, worst + tol, total, worst >= -tol));
    }

    // face consistency
    {
        long n_faces = scenario_.face_consistency_faces;
        std::vector<double> disc(n_faces, 0.0);
        std::vector<long> counts(n_faces, 0);
        int reach = std::max(1, static_cast<int>(std::floor(
                                    core_radius_ / scenario_.lattice_epsilon)));
        parallel_for(
            n_faces,
            [&](std::size_t i) {
                SplitMix64 rng(hash_mix(hash_mix(scenario_.seed, 0x3333), i));
                for (int attempt = 0; attempt < 8; ++attempt) {
                    Eigen::VectorXi anchor(scenario_.dimension);
                    for (int k = 0; k < scenario_.dimension; ++k)
                        anchor[k] = static_cast<int>(rng.next() % (2 * reach)) - reach;
                    auto all = kuhn_simplices(anchor, scenario_.lattice_epsilon);
                    const auto& simplex = all[rng.next() % all.size()];
                    auto idx = simplex.vertex_indices();
                    int drop = static_cast<int>(rng.next() % idx.size());
                    std::vector<Eigen::VectorXi> face;
                    for (int j = 0; j < static_cast<int>(idx.size()); ++j)
                        if (j != drop) face.push_back(idx[j]);
                    auto sharing = simplices_containing_face(face, scenario_.lattice_epsilon);
                    if (sharing.size() != 2) continue;
                    auto rep = evaluator_->verify_face_consistency(
                        sharing[0], sharing[1], face, scenario_.face_consistency_points);
                    disc[i] = rep.max_discrepancy;
                    counts[i] = rep.samples;
                    return;
                }
                throw ConfigError("face consistency: failed to sample an interior facet");
            },
            threads_);
        double worst = *std::max_element(disc.begin(), disc.end());
        long total = std::accumulate(counts.begin(), counts.end(), 0L);
        report.checks.push_back(
            make_check("face-consistency", 1e-6, worst, 1e-6 - worst, total, worst < 1e-6));
    }

    // origin lower bound, sampled out to the largest radius the box supports
    {
        long n_samples = scenario_.lower_bound_samples;
        double radius = std::min(3.0 * map_->separation_radius(),
                                 scenario_.box_radius - scenario_.margin());
        std::vector<double> slacks(n_samples);
        parallel_for(
            n_samples,
            [&](std::size_t i) {
                SplitMix64 rng(hash_mix(hash_mix(scenario_.seed, 0x4444), i));
                Vec x = rng.ball_vector(scenario_.dimension, radius);
                slacks[i] = map_->verify_origin_bound(x).slack;
            },
            threads_);
        double worst = *std::min_element(slacks.begin(), slacks.end());
        report.checks.push_back(
            make_check("origin-bound", -tol, worst, worst + tol, n_samples, worst >= -tol));
    }

    // surjectivity probe (evidence, not proof)
    if (scenario_.surjectivity_probes > 0) {
        long n_probes = scenario_.surjectivity_probes;
        double probe_radius = std::min(core_radius_, 3.0);
        std::vector<int> found(n_probes, 0);
        parallel_for(
            n_probes,
            [&](std::size_t i) {
                SplitMix64 rng(hash_mix(hash_mix(scenario_.seed, 0x5555), i));
                Vec y(scenario_.dimension);
                for (int k = 0; k < scenario_.dimension; ++k)
                    y[k] = rng.uniform(-probe_radius, probe_radius);
                found[i] = map_->find_preimage(y).found ? 1 : 0;
            },
            threads_);
        long hits = std::accumulate(found.begin(), found.end(), 0L);
        double frac = static_cast<double>(hits) / static_cast<double>(n_probes);
        report.checks.push_back(make_check("surjectivity-probe", 1.0, frac, frac - 1.0, n_probes,
                                           hits == n_probes,
                                           std::to_string(hits) + "/" + std::to_string(n_probes) +
                                               " preimages found"));
    }

    report.wall_ms = elapsed_ms(start);
    return report;
}

SubcommandReport Harness::run_net_check() {
    auto start = std::chrono::steady_clock::now();
    SubcommandReport report;
    report.scenario = scenario_.name;
    report.subcommand = "net-check";
    const double bound = scenario_.derived_covering_bound();

    long n_samples = scenario_.net_check_samples;
    std::vector<double> dist(n_samples);
    std::vector<std::string> rows(n_samples);
    parallel_for(
        n_samples,
        [&](std::size_t i) {
            Vec y = sample_core_point(0x6666, i);
            dist[i] = nearest_net_distance(y);
            rows[i] = vec_str(y) + "," + fmt(dist[i]) + "," + fmt(bound) + "," +
                      fmt(bound - dist[i]);
        },
        threads_);
    double worst = *std::max_element(dist.begin(), dist.end());
    double margin = bound - worst;
    report.checks.push_back(make_check("covering-bound", bound, worst, margin, n_samples,
                                       margin > 0.0));
    write_csv("net_check", "y,nearest_distance,bound,margin", rows);
    report.wall_ms = elapsed_ms(start);
    return report;
}

SubcommandReport Harness::run_degree() {
    auto start = std::chrono::steady_clock::now();
    SubcommandReport report;
    report.scenario = scenario_.name;
    report.subcommand = "degree";
    if (scenario_.dimension > 3)
        throw ConfigError("degree subcommand supports n = 2 and n = 3 only");

    double r1 = map_->separation_radius();
    std::vector<double> radii = scenario_.degree_radii;
    if (radii.empty()) radii = {r1, 2.0 * r1};
    bool first = true;
    for (double radius : radii) {
        if (radius + scenario_.margin() > scenario_.box_radius + 1e-9)
            throw ConfigError("degree: radius " + fmt(radius) +
                              " plus core margin exceeds net.box_radius; enlarge the box");
        long resolution = scenario_.dimension == 2 ? scenario_.winding_resolution
                                                   : scenario_.icosphere_level;
        auto deg = map_->degree(radius, resolution, scenario_.seed, threads_);
        char tag_buf[32];
        std::snprintf(tag_buf, sizeof(tag_buf), "r%.6g", radius);
        std::string tag = tag_buf;
        report.checks.push_back(make_check("degree-" + tag, 1.0, deg.degree,
                                           deg.degree == 1 ? 0.0 : -1.0, deg.samples,
                                           deg.degree == 1));
        auto anti = map_->antipodal_check(radius, scenario_.antipodal_pairs, threads_, first);
        report.checks.push_back(make_check("antipodal-gap-" + tag, 0.1, anti.min_angle,
                                           anti.min_angle - 0.1, anti.samples,
                                           anti.min_angle > 0.1));
        report.checks.push_back(make_check("antipodal-distance-" + tag, 0.0,
                                           anti.min_distance_margin, anti.min_distance_margin,
                                           anti.samples, anti.min_distance_margin > 0.0));
        if (first && !anti.details.empty()) {
            std::vector<std::string> rows;
            rows.reserve(anti.details.size());
            for (const auto& d : anti.details)
                rows.push_back(vec_str(d.direction) + "," + fmt(d.angle) + "," +
                               fmt(d.radial_gap) + "," + fmt(d.image_distance));
            write_csv("antipodal", "v,angle,radial_gap,image_distance", rows);
        }
        first = false;
    }
    report.wall_ms = elapsed_ms(start);
    return report;
}

SubcommandReport Harness::run_directions() {
    auto start = std::chrono::steady_clock::now();
    SubcommandReport report;
    report.scenario = scenario_.name;
    report.subcommand = "directions";
    if (scenario_.dimension > 3)
        throw ConfigError("directions subcommand supports n = 2 and n = 3 only");

    DriftParams params;
    params.m_start = scenario_.dir_m_start > 0
                         ? scenario_.dir_m_start
                         : 8.0 * std::max(map_->separation_radius(), 1.0);
    params.growth = scenario_.dir_growth;
    params.tol = scenario_.dir_tol;
    params.max_terms = scenario_.dir_max_terms;

    Vec base = scenario_.direction_base.size() == scenario_.dimension
                   ? scenario_.direction_base
                   : Vec::Zero(scenario_.dimension);

    DirectionTable table =
        local_direction_map(dir_ctx_, base, scenario_.grid_resolution, params, threads_);

    report.checks.push_back(make_check("direction-oddness", 1e-3, table.max_oddness,
                                       1e-3 - table.max_oddness,
                                       static_cast<long>(table.entries.size()),
                                       table.max_oddness < 1e-3));
    double half_spacing = table.grid_spacing / 2.0;
    report.checks.push_back(make_check("direction-separation", half_spacing,
                                       table.min_separation,
                                       table.min_separation - half_spacing,
                                       static_cast<long>(table.entries.size()),
                                       table.min_separation > half_spacing));
    double worst_gap = 0.0;
    for (const auto& e : table.entries) worst_gap = std::max(worst_gap, e.final_gap);
    report.checks.push_back(make_check("direction-convergence", params.tol, worst_gap,
                                       params.tol - worst_gap,
                                       static_cast<long>(table.entries.size()),
                                       worst_gap < params.tol));
    if (scenario_.family == MetricFamily::Flat) {
        double worst_id = 0.0;
        for (const auto& e : table.entries)
            worst_id = std::max(worst_id, (e.tangent - e.direction).norm());
        report.checks.push_back(make_check("direction-identity", 1e-9, worst_id, 1e-9 - worst_id,
                                           static_cast<long>(table.entries.size()),
                                           worst_id < 1e-9));
    }

    {
        std::vector<std::string> rows;
        rows.reserve(table.entries.size());
        for (const auto& e : table.entries)
            rows.push_back(vec_str(e.direction) + "," + vec_str(e.tangent) + "," +
                           fmt(e.oddness) + "," + std::to_string(e.terms));
        write_csv("direction_table", "v,w,oddness,terms", rows);
    }

    if (scenario_.experiment_u.size() == scenario_.dimension &&
        scenario_.experiment_v.size() == scenario_.dimension) {
        InjectivityReport rep = injectivity_experiment(dir_ctx_, base, scenario_.experiment_u,
                                                       scenario_.experiment_v, params);
        report.checks.push_back(make_check("injectivity-witness", rep.delta_tilde,
                                           rep.witness_gap, rep.delta_tilde - rep.witness_gap,
                                           1, rep.witness_found));
        double lo = rep.probe_time - rep.delta_tilde, hi = rep.probe_time + rep.delta_tilde;
        double bracket_margin = std::min(rep.pq_norm - lo, hi - rep.pq_norm);
        report.checks.push_back(make_check("injectivity-bracket", hi, rep.pq_norm, bracket_margin,
                                           1, rep.bracket_ok));
        report.checks.push_back(make_check("injectivity-drift", 1.0 - rep.eps_gap, rep.qp_inner,
                                           (1.0 - rep.eps_gap) - rep.qp_inner,
                                           static_cast<long>(rep.drift_inner.size()),
                                           rep.drift_ok));

        json j;
        j["scenario"] = scenario_.name;
        j["u"] = json::parse("[" + vec_str(rep.u) + "]");
        j["v"] = json::parse("[" + vec_str(rep.v) + "]");
        j["eps_gap"] = rep.eps_gap;
        j["covering_bound"] = rep.delta_tilde;
        j["probe_time"] = rep.probe_time;
        j["witness_found"] = rep.witness_found;
        if (rep.witness_found) {
            j["witness"] = json::parse("[" + vec_str(rep.witness) + "]");
            j["witness_gap"] = rep.witness_gap;
            j["pq_norm"] = rep.pq_norm;
            j["bracket_low"] = lo;
            j["bracket_high"] = hi;
            j["bracket_ok"] = rep.bracket_ok;
            j["qp_inner"] = rep.qp_inner;
            j["drift_inner"] = rep.drift_inner;
            j["drift_ok"] = rep.drift_ok;
        }
        std::filesystem::create_directories(out_dir_);
        std::ofstream out(out_dir_ + "/" + scenario_.name + "_injectivity.json");
        out << j.dump(2) << "\n";
    }

    report.wall_ms = elapsed_ms(start);
    return report;
}

bool Harness::directions_enabled() const {
    double m_start = scenario_.dir_m_start > 0
                         ? scenario_.dir_m_start
                         : 8.0 * std::max(map_->separation_radius(), 1.0);
    double clearance = scenario_.delta +
                       scenario_.lattice_epsilon * std::sqrt(double(scenario_.dimension));
    return m_start + clearance <= scenario_.box_radius;
}

std::vector<SubcommandReport> Harness::run_all() {
    std::vector<SubcommandReport> reports;
    reports.push_back(run_audit());
    std::vector<std::string> downstream = {"phi-verify", "net-check", "degree"};
    if (directions_enabled()) downstream.push_back("directions");
    for (const std::string& sub : downstream) {
        if (!hypothesis_ok_) {
            SubcommandReport skipped;
            skipped.scenario = scenario_.name;
            skipped.subcommand = sub;
            skipped.not_applicable = true;
            skipped.hypothesis_violation = true;
            CheckResult c;
            c.name = sub + "-skipped";
            c.pass = false;
            c.note = "not applicable: net isometry hypothesis violated by the audit";
            skipped.checks.push_back(c);
            reports.push_back(std::move(skipped));
            continue;
        }
        reports.push_back(run(sub));
    }
    return reports;
}

const std::vector<std::string>& Harness::subcommands() {
    static const std::vector<std::string> subs = {"audit", "phi-verify", "net-check", "degree",
                                                  "directions", "all"};
    return subs;
}

SubcommandReport Harness::run(const std::string& subcommand) {
    if (subcommand == "audit") return run_audit();
    if (subcommand == "phi-verify") return run_phi_verify();
    if (subcommand == "net-check") return run_net_check();
    if (subcommand == "degree") return run_degree();
    if (subcommand == "directions") return run_directions();
    throw ConfigError("unknown subcommand '" + subcommand + "'");
}

std::string Harness::write_report(const SubcommandReport& report) const {
    json j;
    j["scenario"] = report.scenario;
    j["subcommand"] = report.subcommand;
    if (report.hypothesis_violation) j["hypothesis_violation"] = true;
    if (report.not_applicable) j["not_applicable"] = true;
    j["checks"] = json::array();
    for (const auto& c : report.checks) {
        json jc;
        jc["name"] = c.name;
        jc["bound"] = c.bound;
        jc["worst"] = c.worst;
        jc["slack"] = c.slack;
        jc["samples"] = c.samples;
        jc["pass"] = c.pass;
        if (!c.note.empty()) jc["note"] = c.note;
        j["checks"].push_back(jc);
    }
    j["wall_ms"] = report.wall_ms;
    std::string text = j.dump(2) + "\n";
    std::filesystem::create_directories(out_dir_);
    std::ofstream out(out_dir_ + "/" + report.scenario + "_" + report.subcommand + ".json");
    out << text;
    return text;
}

}  // namespace netembed
