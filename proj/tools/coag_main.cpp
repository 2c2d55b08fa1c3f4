// Experiment driver: config parsing, subcommand dispatch, deterministic
// seeding, output persistence. See docs/config.md for the config schema.

#include <chrono>
#include <map>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coag/analysis.hpp"
#include "coag/io.hpp"
#include "coag/parallel.hpp"
#include "coag/reference.hpp"
#include "coag/smoluchowski.hpp"
#include "coag/trajectories.hpp"

namespace fs = std::filesystem;
using coag::json;

namespace {

constexpr const char* kVersion = "0.2.0";

struct CliOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::vector<std::string> overrides;
    bool dry_run = false;
};

// --set a.b.c=value, parsed as JSON when possible, else as a string
void apply_override(json& cfg, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
        throw coag::ConfigError("--set expects key.path=value, got '" + spec + "'");
    const std::string path = spec.substr(0, eq);
    const std::string raw = spec.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (...) {
        value = raw;
    }
    json* node = &cfg;
    std::stringstream ss(path);
    std::string key;
    std::vector<std::string> keys;
    while (std::getline(ss, key, '.')) keys.push_back(key);
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) node = &((*node)[keys[i]]);
    (*node)[keys.back()] = value;
}

json load_config(const CliOptions& opts) {
    std::ifstream in(opts.config_path);
    if (!in) throw coag::ConfigError("cannot read config file '" + opts.config_path + "'");
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const std::exception& e) {
        throw coag::ConfigError(std::string("config parse error: ") + e.what());
    }
    for (const auto& o : opts.overrides) apply_override(cfg, o);
    return cfg;
}

void write_text(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw coag::CoagError("cannot write output file " + p.string());
    out << content;
}

void write_manifest(const CliOptions& opts, const std::string& subcommand, const json& cfg,
                    const std::vector<std::string>& outputs, double wall_s) {
    json manifest{{"tool", "coag"},
                  {"version", kVersion},
                  {"subcommand", subcommand},
                  {"config", cfg},
                  {"config_hash", coag::fnv1a64(cfg.dump())},
                  {"seed", cfg.contains("seed") ? cfg.at("seed") : json(nullptr)},
                  {"workers", coag::worker_count()},
                  {"outputs", outputs},
                  {"wall_time_s", wall_s}};
    write_text(fs::path(opts.out_dir) / (subcommand + ".manifest.json"),
               manifest.dump(2) + "\n");
}

std::vector<double> number_list(const json& cfg, const std::string& key,
                                const std::string& path) {
    const json& v = coag::require_field(cfg, key, path);
    if (!v.is_array() || v.empty())
        throw coag::ConfigError("field " + path + "/" + key + " must be a non-empty array");
    return v.get<std::vector<double>>();
}

std::vector<std::int64_t> int_list(const json& cfg, const std::string& key,
                                   const std::string& path) {
    const json& v = coag::require_field(cfg, key, path);
    if (!v.is_array() || v.empty())
        throw coag::ConfigError("field " + path + "/" + key + " must be a non-empty array");
    return v.get<std::vector<std::int64_t>>();
}

std::string csv_row(const std::vector<std::string>& cells) {
    std::string row;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) row += ",";
        row += cells[i];
    }
    return row + "\n";
}

// ---- subcommands ------------------------------------------------------

std::vector<std::string> run_simulate(const CliOptions& opts, const json& cfg) {
    coag::SimConfig sim = coag::sim_config_from_json(cfg);
    const std::int64_t replicas = cfg.contains("replicas") ? cfg.at("replicas").get<std::int64_t>() : 1;
    std::vector<std::int64_t> L_list =
        cfg.contains("L_list") ? cfg.at("L_list").get<std::vector<std::int64_t>>()
                               : std::vector<std::int64_t>{1, 10, 100};
    std::vector<double> times = cfg.contains("summary_times")
                                    ? cfg.at("summary_times").get<std::vector<double>>()
                                    : std::vector<double>{sim.T};

    std::vector<std::string> outputs;
    std::string summary = "replica,t,particle_count";
    for (auto L : L_list) summary += ",mass_below_" + std::to_string(L);
    summary += "\n";

    for (std::int64_t r = 0; r < replicas; ++r) {
        coag::SimConfig c = sim;
        c.seed = coag::derive_seed(sim.seed, static_cast<std::uint64_t>(r));
        const coag::EventLog log = coag::simulate(c);
        const std::string name = "events_r" + std::to_string(r) + ".jsonl";
        std::ostringstream os;
        coag::event_log_to_jsonl(log, os);
        write_text(fs::path(opts.out_dir) / name, os.str());
        outputs.push_back(name);
        for (double t : times) {
            const coag::Configuration state = log.state_at(t);
            std::vector<std::string> cells{std::to_string(r), coag::format_double(t),
                                           std::to_string(state.particle_count())};
            for (auto L : L_list)
                cells.push_back(coag::format_double(
                    static_cast<double>(state.mass_below(L)) / static_cast<double>(c.N)));
            summary += csv_row(cells);
        }
    }
    write_text(fs::path(opts.out_dir) / "summary.csv", summary);
    outputs.push_back("summary.csv");
    return outputs;
}

std::vector<std::string> run_decompose(const CliOptions& opts, const json& cfg) {
    const std::string input =
        coag::require_field(cfg, "events", "").get<std::string>();
    std::ifstream in(input);
    if (!in) throw coag::ConfigError("cannot read events file '" + input + "'");
    const coag::EventLog log = coag::event_log_from_jsonl(in);
    const coag::TreeForest forest = coag::decompose(log);
    std::ostringstream os;
    for (const auto& tree : forest.trees) os << coag::trajectory_to_json(tree).dump() << "\n";
    write_text(fs::path(opts.out_dir) / "trees.jsonl", os.str());
    return {"trees.jsonl"};
}

std::vector<std::string> run_observables(const CliOptions& opts, const json& cfg) {
    const std::string input = coag::require_field(cfg, "events", "").get<std::string>();
    std::ifstream in(input);
    if (!in) throw coag::ConfigError("cannot read events file '" + input + "'");
    const coag::EventLog log = coag::event_log_from_jsonl(in);
    const coag::TreeForest forest = coag::decompose(log);
    const auto L_list = int_list(cfg, "L_list", "");
    const coag::ObservablesTable table = coag::observables(forest, L_list);

    std::string ng = "L,non_gel_mass\n";
    for (const auto& [L, v] : table.non_gel_mass)
        ng += csv_row({std::to_string(L), coag::format_double(v)});
    write_text(fs::path(opts.out_dir) / "non_gel_mass.csv", ng);

    std::string hist = "size,count\n";
    for (const auto& [size, count] : table.size_histogram)
        hist += csv_row({std::to_string(size), std::to_string(count)});
    write_text(fs::path(opts.out_dir) / "size_histogram.csv", hist);

    write_text(fs::path(opts.out_dir) / "observables.json",
               json{{"second_moment", table.second_moment}}.dump(2) + "\n");
    return {"non_gel_mass.csv", "size_histogram.csv", "observables.json"};
}

std::vector<std::string> run_qmass(const CliOptions& opts, const json& cfg) {
    const coag::KernelSpec kernel =
        coag::kernel_from_json(coag::require_field(cfg, "kernel", ""), "/kernel");
    const coag::PlacementSpec placement =
        coag::placement_from_json(coag::require_field(cfg, "placement", ""), "/placement");
    const double T = coag::require_number(cfg, "T", "");
    const std::int64_t n_max = coag::require_int(cfg, "n_max", "");
    const double H = coag::kernel_upper_constant(kernel, 1 << 20).value;

    std::string out = "n,value,method,bound\n";
    for (std::int64_t n = 1; n <= n_max; ++n) {
        double value;
        std::string method;
        if (n <= coag::kSigmaSizeLimit) {
            value = coag::q_mass_nonspatial(static_cast<int>(n), T, kernel, placement);
            method = "exact";
        } else if (auto lq = coag::log_q_mass_closed_form(kernel, static_cast<int>(n), T)) {
            value = std::exp(*lq);
            method = "closed_form";
        } else {
            throw coag::ConfigError("qmass: n > " + std::to_string(coag::kSigmaSizeLimit) +
                                    " requires a kernel with a closed form");
        }
        out += csv_row({std::to_string(n), coag::format_double(value), method,
                        coag::format_double(coag::q_mass_bound(static_cast<int>(n), T, H))});
    }
    write_text(fs::path(opts.out_dir) / "qmass.csv", out);
    return {"qmass.csv"};
}

std::vector<std::string> run_mtable(const CliOptions& opts, const json& cfg) {
    const coag::KernelSpec kernel =
        coag::kernel_from_json(coag::require_field(cfg, "kernel", ""), "/kernel");
    const coag::PlacementSpec placement =
        coag::placement_from_json(coag::require_field(cfg, "placement", ""), "/placement");
    const coag::SiteSpace space =
        coag::site_space_from_json(coag::require_field(cfg, "space", ""), "/space");
    const double T = coag::require_number(cfg, "T", "");
    const double b = cfg.contains("b") ? cfg.at("b").get<double>() : 1.0;
    const std::int64_t n_max = coag::require_int(cfg, "n_max", "");
    const std::int64_t mc_replicas =
        cfg.contains("mc_replicas") ? cfg.at("mc_replicas").get<std::int64_t>() : 20000;
    const std::uint64_t seed =
        cfg.contains("seed") ? cfg.at("seed").get<std::uint64_t>() : 1;
    const double H = coag::kernel_upper_constant(kernel, 1 << 20).value;

    const coag::SizeMassTable table = coag::build_size_mass_table(
        static_cast<int>(n_max), T, b, kernel, placement, space, mc_replicas, seed);
    std::string out = "n,value,log_value,method,bound\n";
    for (int n = 1; n <= table.n_max(); ++n)
        out += csv_row({std::to_string(n), coag::format_double(table.mass(n)),
                        coag::format_double(table.log_mass[n - 1]), table.method[n - 1],
                        coag::format_double(coag::m_moment_bound(n, T, H, b))});
    write_text(fs::path(opts.out_dir) / "mtable.csv", out);
    return {"mtable.csv"};
}

std::vector<std::string> run_el_solve(const CliOptions& opts, const json& cfg) {
    const coag::KernelSpec kernel =
        coag::kernel_from_json(coag::require_field(cfg, "kernel", ""), "/kernel");
    const coag::PlacementSpec placement =
        coag::placement_from_json(coag::require_field(cfg, "placement", ""), "/placement");
    const coag::SiteSpace space = cfg.contains("space")
                                      ? coag::site_space_from_json(cfg.at("space"), "/space")
                                      : coag::SiteSpace::single();
    const double T = coag::require_number(cfg, "T", "");
    const std::int64_t L = coag::require_int(cfg, "L", "");
    const double damping = cfg.contains("damping") ? cfg.at("damping").get<double>() : 0.5;
    const double tol = cfg.contains("tol") ? cfg.at("tol").get<double>() : 1e-12;
    const std::int64_t max_iter =
        cfg.contains("max_iter") ? cfg.at("max_iter").get<std::int64_t>() : 100000;

    const coag::SizeMassTable table = coag::build_size_mass_table(
        static_cast<int>(L), T, 1.0, kernel, placement, space);
    const coag::ElSolution sol = coag::el_fixed_point(T, table, static_cast<int>(L), damping,
                                                      tol, static_cast<int>(max_iter));

    const double H = coag::kernel_upper_constant(kernel, 1 << 20).value;
    const double h = coag::kernel_lower_constant(kernel, 1 << 20).value;
    json report{{"T", T},
                {"L", L},
                {"D", sol.D},
                {"converged", sol.converged},
                {"iterations", sol.iterations},
                {"residual", sol.residual},
                {"first_moment", sol.first_moment},
                {"second_moment", sol.second_moment},
                {"second_moment_bound_applicable", T * H * std::exp(2.0) < 1.0},
                {"rate_function", coag::rate_function_reduced(sol.nu, table, T)}};
    // two reference bounds for the truncated first moment in the supercritical
    // regime; recorded side by side, neither asserted as the L -> inf limit
    if (h > 0.0)
        report["supercritical_first_moment_bounds"] =
            json{{"two_log_T_over_hT", 2.0 * std::log(T) / (h * T)},
                 {"minimiser_bound",
                  std::max(std::log(2.0 * T * H * std::exp(2.0)) / (h * T),
                           1.0 / (2.0 * 3.14159265358979323846 * H * T))}};
    write_text(fs::path(opts.out_dir) / "el_solution.json", report.dump(2) + "\n");

    std::string nu = "n,nu_n\n";
    for (int n = 1; n <= sol.L; ++n)
        nu += csv_row({std::to_string(n), coag::format_double(sol.nu[n - 1])});
    write_text(fs::path(opts.out_dir) / "el_nu.csv", nu);
    return {"el_solution.json", "el_nu.csv"};
}

std::vector<std::string> run_gel_bounds(const CliOptions& opts, const json& cfg) {
    double H, h;
    if (cfg.contains("kernel")) {
        const coag::KernelSpec kernel = coag::kernel_from_json(cfg.at("kernel"), "/kernel");
        const std::int64_t cutoff =
            cfg.contains("mass_cutoff") ? cfg.at("mass_cutoff").get<std::int64_t>() : (1 << 20);
        H = coag::kernel_upper_constant(kernel, cutoff).value;
        h = coag::kernel_lower_constant(kernel, cutoff).value;
    } else {
        H = coag::require_number(cfg, "H", "");
        h = coag::require_number(cfg, "h", "");
    }
    const coag::GelationReport rep = coag::gelation_bounds(H, h);
    json report{{"H", rep.H},
                {"h", rep.h},
                {"t_gel_lower", rep.t_gel_lower},
                {"uniqueness_T", rep.uniqueness_T},
                {"t_gel_upper", rep.t_gel_upper ? json(*rep.t_gel_upper) : json(nullptr)}};
    write_text(fs::path(opts.out_dir) / "gel_bounds.json", report.dump(2) + "\n");
    std::string tbl = "T,I_lower\n";
    for (const auto& [t, v] : rep.I_lower_table)
        tbl += csv_row({coag::format_double(t), coag::format_double(v)});
    write_text(fs::path(opts.out_dir) / "I_lower.csv", tbl);
    return {"gel_bounds.json", "I_lower.csv"};
}

std::vector<std::string> run_gibbs_check(const CliOptions& opts, const json& cfg) {
    coag::SimConfig sim = coag::sim_config_from_json(cfg);
    const double b = cfg.contains("b") ? cfg.at("b").get<double>() : 1.0;
    const std::int64_t replicas =
        cfg.contains("replicas") ? cfg.at("replicas").get<std::int64_t>() : 100000;
    coag::TestFunctional f = coag::TestFunctional::one();
    if (cfg.contains("f")) {
        const json& fj = cfg.at("f");
        const std::string kind = coag::require_field(fj, "kind", "/f").get<std::string>();
        if (kind == "one")
            f = coag::TestFunctional::one();
        else if (kind == "max_tree_size_at_most")
            f = coag::TestFunctional::max_tree_size_at_most(coag::require_int(fj, "s", "/f"));
        else if (kind == "exp_neg_total_weight")
            f = coag::TestFunctional::exp_neg_total_weight();
        else
            throw coag::ConfigError("/f/kind: unknown test functional '" + kind + "'");
    }
    const coag::GibbsResult res = coag::gibbs_check(sim, f, b, replicas);
    json report{{"f", f.name()},         {"b", b},
                {"replicas", replicas},  {"lhs", res.lhs},
                {"lhs_err", res.lhs_err}, {"rhs", res.rhs},
                {"rhs_err", res.rhs_err}, {"variance_warning", res.variance_warning}};
    write_text(fs::path(opts.out_dir) / "gibbs_check.json", report.dump(2) + "\n");
    return {"gibbs_check.json"};
}

std::vector<std::string> run_ng_scan(const CliOptions& opts, const json& cfg) {
    const coag::KernelSpec kernel =
        coag::kernel_from_json(coag::require_field(cfg, "kernel", ""), "/kernel");
    const coag::PlacementSpec placement =
        coag::placement_from_json(coag::require_field(cfg, "placement", ""), "/placement");
    const coag::SiteSpace space = cfg.contains("space")
                                      ? coag::site_space_from_json(cfg.at("space"), "/space")
                                      : coag::SiteSpace::single();
    const auto rows = coag::ng_scan(kernel, placement, space, number_list(cfg, "T_list", ""),
                                    int_list(cfg, "N_list", ""), int_list(cfg, "L_list", ""),
                                    coag::require_int(cfg, "replicas", ""),
                                    static_cast<std::uint64_t>(coag::require_int(cfg, "seed", "")));
    std::string out = "T,N,L,mean,std_err,gel_flag\n";
    for (const auto& r : rows)
        out += csv_row({coag::format_double(r.T), std::to_string(r.N), std::to_string(r.L),
                        coag::format_double(r.mean), coag::format_double(r.std_err),
                        r.gel_flag ? "1" : "0"});
    write_text(fs::path(opts.out_dir) / "ng_scan.csv", out);
    return {"ng_scan.csv"};
}

std::vector<std::string> run_smol(const CliOptions& opts, const json& cfg) {
    const coag::KernelSpec kernel =
        coag::kernel_from_json(coag::require_field(cfg, "kernel", ""), "/kernel");
    const coag::PlacementSpec placement =
        coag::placement_from_json(coag::require_field(cfg, "placement", ""), "/placement");
    const coag::SiteSpace space =
        coag::site_space_from_json(coag::require_field(cfg, "space", ""), "/space");
    const double T = coag::require_number(cfg, "T", "");
    const double dt = coag::require_number(cfg, "dt", "");
    const std::int64_t L = coag::require_int(cfg, "L", "");
    std::vector<double> snaps = cfg.contains("snapshot_times")
                                    ? cfg.at("snapshot_times").get<std::vector<double>>()
                                    : std::vector<double>{T};
    const coag::GainConvention conv =
        cfg.contains("gain_convention") && cfg.at("gain_convention") == "unit"
            ? coag::GainConvention::UnitOrderedSum
            : coag::GainConvention::HalfOrderedSum;

    const coag::SmolResult res = coag::smol_solve(
        coag::DensityGrid::monodisperse_init(space, L), kernel, placement, T, dt, snaps, conv);

    std::string out = "t,site,mass,density\n";
    for (const auto& g : res.snapshots)
        for (int x = 0; x < g.site_count; ++x)
            for (std::int64_t m = 1; m <= g.mass_cutoff; ++m)
                if (g.at(x, m) != 0.0)
                    out += csv_row({coag::format_double(g.t), std::to_string(x),
                                    std::to_string(m), coag::format_double(g.at(x, m))});
    write_text(fs::path(opts.out_dir) / "smol_grid.csv", out);

    const auto& last = res.snapshots.back();
    json report{{"T", T},
                {"L", L},
                {"dt", dt},
                {"total_mass", last.total_mass()},
                {"second_moment", last.second_moment()},
                {"leaked_mass", last.leaked_mass},
                {"clamped_mass", res.clamp_total},
                {"clamp_warning", res.clamp_warning},
                {"stability_warning", res.stability_warning}};
    write_text(fs::path(opts.out_dir) / "smol_report.json", report.dump(2) + "\n");
    return {"smol_grid.csv", "smol_report.json"};
}

std::vector<std::string> run_smol_vs_sim(const CliOptions& opts, const json& cfg) {
    coag::SimConfig sim = coag::sim_config_from_json(cfg);
    const double dt = coag::require_number(cfg, "dt", "");
    const std::int64_t L = coag::require_int(cfg, "L", "");
    const std::int64_t replicas = coag::require_int(cfg, "replicas", "");
    const std::vector<double> checkpoints = number_list(cfg, "checkpoints", "");
    const double H = coag::kernel_upper_constant(sim.kernel, L).value;
    const bool regime_warning = sim.T * H >= coag::el_uniqueness_threshold(1.0);

    std::vector<std::string> conventions{"half"};
    if (cfg.value("compare_conventions", true)) conventions.push_back("unit");
    std::string out = "t,l1_distance,mc_err,convention\n";
    for (const std::string& conv_name : conventions) {
        const coag::GainConvention conv = conv_name == "half"
                                              ? coag::GainConvention::HalfOrderedSum
                                              : coag::GainConvention::UnitOrderedSum;
        const auto rows = coag::smol_vs_simulation(sim, L, dt, checkpoints, replicas, conv);
        for (const auto& r : rows)
            out += csv_row({coag::format_double(r.t), coag::format_double(r.l1_distance),
                            coag::format_double(r.mc_err), conv_name});
    }
    write_text(fs::path(opts.out_dir) / "smol_vs_sim.csv", out);
    write_text(fs::path(opts.out_dir) / "smol_vs_sim.json",
               json{{"regime_warning", regime_warning}}.dump(2) + "\n");
    return {"smol_vs_sim.csv", "smol_vs_sim.json"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spatial coagulation process toolkit"};
    app.require_subcommand(1);

    CliOptions opts;
    const std::vector<std::string> names = {"simulate",   "decompose",  "observables", "qmass",
                                            "mtable",     "el-solve",   "gel-bounds",
                                            "gibbs-check", "ng-scan",    "smol",
                                            "smol-vs-sim"};
    std::map<std::string, CLI::App*> subs;
    for (const auto& name : names) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("-c,--config", opts.config_path, "JSON config file")->required();
        sub->add_option("-o,--out", opts.out_dir, "output directory");
        sub->add_option("--set", opts.overrides, "override config fields (dotted.path=value)");
        sub->add_flag("--dry-run", opts.dry_run, "print the resolved plan and exit");
        subs[name] = sub;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    const auto start = std::chrono::steady_clock::now();
    try {
        const json cfg = load_config(opts);
        if (opts.dry_run) {
            std::cout << json{{"subcommand", sub}, {"out_dir", opts.out_dir}, {"config", cfg}}
                             .dump(2)
                      << "\n";
            return 0;
        }
        fs::create_directories(opts.out_dir);
        std::vector<std::string> outputs;
        if (sub == "simulate")
            outputs = run_simulate(opts, cfg);
        else if (sub == "decompose")
            outputs = run_decompose(opts, cfg);
        else if (sub == "observables")
            outputs = run_observables(opts, cfg);
        else if (sub == "qmass")
            outputs = run_qmass(opts, cfg);
        else if (sub == "mtable")
            outputs = run_mtable(opts, cfg);
        else if (sub == "el-solve")
            outputs = run_el_solve(opts, cfg);
        else if (sub == "gel-bounds")
            outputs = run_gel_bounds(opts, cfg);
        else if (sub == "gibbs-check")
            outputs = run_gibbs_check(opts, cfg);
        else if (sub == "ng-scan")
            outputs = run_ng_scan(opts, cfg);
        else if (sub == "smol")
            outputs = run_smol(opts, cfg);
        else if (sub == "smol-vs-sim")
            outputs = run_smol_vs_sim(opts, cfg);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_manifest(opts, sub, load_config(opts), outputs, wall);
    } catch (const coag::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
