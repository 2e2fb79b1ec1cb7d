#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "netembed/directions.hpp"
#include "netembed/gluedmap.hpp"

namespace netembed {

/// Scenario configuration, loaded from a line-oriented `key = value` file with
/// `[section]` headers; arrays are comma-separated.
struct Scenario {
    std::string name;
    int dimension = 2;

    // metric
    MetricFamily family = MetricFamily::Flat;
    Mat matrix;        // linear-pullback
    Vec amplitudes;    // sine-pullback
    Vec frequencies;   // sine-pullback
    Vec conformal;     // conformal coefficients

    // net
    double eps_base = 1.0;
    double delta = 0.75;
    double jitter = 0.0;
    std::uint64_t seed = 1;
    double box_radius = 0.0;
    bool procedural = false;
    std::string net_file;        // load instead of generating
    std::string embedding_mode = "auto";  // auto | pullback | identity | table
    std::string embedding_table;

    double lattice_epsilon = 1.0;

    // verify budgets
    double core_radius = 0.0;  // 0 = derive from box and margin
    long round_preserving_samples = 10000;
    long chain_bound_samples = 1000;
    long chain_bound_simplices = 20;
    long face_consistency_faces = 100;
    long face_consistency_points = 50;
    long lower_bound_samples = 1000;
    long surjectivity_probes = 10;
    long net_check_samples = 1000;
    long audit_pairs = 2000;
    double audit_threshold = 1e-6;
    double audit_radius = 10.0;

    // degree
    long winding_resolution = 10000;
    int icosphere_level = 4;
    long antipodal_pairs = 500;
    std::vector<double> degree_radii;  // empty = {R1, 2 R1}

    // directions
    long grid_resolution = 8;
    double dir_m_start = 0.0;  // 0 = auto: 8 * max(separation radius, 1)
    double dir_growth = 2.0;
    double dir_tol = 1e-6;
    int dir_max_terms = 12;
    Vec experiment_u, experiment_v;  // empty = skip the experiment
    Vec direction_base;              // empty = origin

    std::string output_dir = "out";

    double derived_offset_radius() const;      // from lattice eps, delta, n
    double derived_separation_radius() const;
    double derived_covering_bound() const { return 2.0 * delta * dimension; }
    double derived_probe_time() const;         // 0 when no experiment configured
    double margin() const;                     // max(R1, T) + eps sqrt(n)
};

Scenario load_scenario(const std::string& path);

struct CheckResult {
    std::string name;
    double bound = 0.0;   // acceptance threshold for the statistic
    double worst = 0.0;   // extremal observed statistic
    double slack = 0.0;   // signed margin, >= 0 iff pass
    long samples = 0;
    bool pass = false;
    std::string note;
};

struct SubcommandReport {
    std::string scenario;
    std::string subcommand;
    std::vector<CheckResult> checks;
    double wall_ms = 0.0;
    bool hypothesis_violation = false;
    bool not_applicable = false;

    bool all_pass() const;
};

/// Builds scenario objects once and runs verification subcommands against them.
class Harness {
public:
    Harness(Scenario scenario, int threads = 0, std::string output_dir = "",
            std::uint64_t seed_override = 0);

    const Scenario& scenario() const { return scenario_; }
    const GluedMap& glued_map() const { return *map_; }
    double core_radius() const { return core_radius_; }

    SubcommandReport run_audit();
    SubcommandReport run_phi_verify();
    SubcommandReport run_net_check();
    SubcommandReport run_degree();
    SubcommandReport run_directions();

    /// True when the drift schedule's first radius fits inside the net box;
    /// `all` includes the directions verifier only in that case.
    bool directions_enabled() const;

    /// audit, phi-verify, net-check, degree, and (when enabled) directions;
    /// downstream subcommands are marked not-applicable when the audit detects
    /// a hypothesis violation.
    std::vector<SubcommandReport> run_all();

    SubcommandReport run(const std::string& subcommand);
    static const std::vector<std::string>& subcommands();

    /// Writes <out>/<scenario>_<subcommand>.json (and returns the JSON text).
    std::string write_report(const SubcommandReport& report) const;

    /// Distance from a chart point to the nearest embedded net point, with
    /// candidates pruned through the chart-Lipschitz radius.
    double nearest_net_distance(const Vec& y) const;

private:
    void ensure_hypothesis_checked();
    Vec sample_core_point(std::uint64_t salt, std::uint64_t index) const;
    void write_csv(const std::string& stem, const std::string& header,
                   const std::vector<std::string>& rows) const;

    Scenario scenario_;
    int threads_;
    std::string out_dir_;

    std::shared_ptr<MetricField> metric_;
    std::shared_ptr<Net> net_;
    std::shared_ptr<NetRounding> rounding_;
    std::shared_ptr<Embedding> embedding_;
    std::shared_ptr<SimplexMapEvaluator> evaluator_;
    std::shared_ptr<GluedMap> map_;
    DirectionContext dir_ctx_;
    double core_radius_ = 0.0;
    double chart_ratio_upper_ = 1.0;

    bool hypothesis_checked_ = false;
    bool hypothesis_ok_ = true;
    CheckResult audit_check_;
};

}  // namespace netembed
