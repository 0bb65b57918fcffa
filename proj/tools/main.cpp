#include "filmflow/config.hpp"
#include "filmflow/geometry.hpp"
#include "filmflow/io.hpp"
#include "filmflow/probes.hpp"
#include "filmflow/stability.hpp"
#include "filmflow/stepper.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// exit codes: 0 finished, 1 error, 2 stopped on a terminal event
// (slope activation or pinch-off), 3 probe inequality violated
constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitTerminal = 2;
constexpr int kExitProbeViolation = 3;

json finite_or_string(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
}

void apply_overrides(filmflow::Config& cfg, const std::vector<std::string>& sets) {
    for (const std::string& s : sets) {
        const std::size_t eq = s.find('=');
        const std::size_t dot = s.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw std::runtime_error("--set expects section.key=value, got '" + s + "'");
        cfg.set(s.substr(0, dot), s.substr(dot + 1, eq - dot - 1), s.substr(eq + 1));
    }
}

std::string timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%F %T", std::gmtime(&t));
    return buf;
}

struct EvolveOutcome {
    int exit_code = kExitOk;
    json summary;
};

EvolveOutcome run_evolution(filmflow::Config cfg, const std::vector<std::string>& sets) {
    apply_overrides(cfg, sets);
    filmflow::RunSetup run = filmflow::build_run(cfg);
    fs::create_directories(run.output_dir);

    std::ofstream log(run.output_dir + "/run.log");
    log << timestamp() << " start: m=" << run.h0.m() << " n=" << run.h0.n()
        << " b=" << run.h0.b() << " tau=" << run.flow.tau << " steps=" << run.steps
        << '\n';

    EvolveOutcome out;
    filmflow::EnergyModel model(run.model);
    filmflow::EvolutionTrace trace;
    try {
        trace = filmflow::evolve(run.h0, model, run.flow, run.steps, run.step,
                                 [&](int step, const filmflow::StepResult& s) {
                                     log << timestamp() << " step " << step
                                         << " E=" << s.energy.total
                                         << " pen=" << s.penalty
                                         << " res=" << s.grad_residual
                                         << " it=" << s.iterations << '\n';
                                 });
    } catch (const filmflow::OptimizerStall& stall) {
        log << timestamp() << " stalled: " << stall.what() << '\n';
        out.exit_code = kExitError;
        out.summary["error"] = std::string("optimizer stall: ") + stall.what();
        out.summary["grad_residual"] = stall.best.grad_residual;
        return out;
    }

    if (run.write_trace) filmflow::io::write_trace_csv(trace, run.output_dir + "/trace.csv");
    if (run.write_snapshots)
        filmflow::io::write_snapshots_csv(trace, run.output_dir + "/snapshots.csv",
                                          run.snapshot_stride);
    filmflow::io::write_profile_csv(trace.profiles.back(),
                                    run.output_dir + "/final_profile.csv");
    if (run.gnuplot) filmflow::io::write_gnuplot_script(trace, run.output_dir);

    const char* reason = "completed";
    if (trace.reason == filmflow::EvolutionTrace::Reason::slope_activation)
        reason = "slope_activation";
    else if (trace.reason == filmflow::EvolutionTrace::Reason::pinch_off)
        reason = "pinch_off";
    out.exit_code =
        trace.reason == filmflow::EvolutionTrace::Reason::completed ? kExitOk : kExitTerminal;

    out.summary["reason"] = reason;
    out.summary["steps_taken"] = trace.steps.size();
    out.summary["t_final"] = trace.times.back();
    out.summary["initial_energy"] = trace.initial_energy;
    out.summary["final_energy"] =
        trace.steps.empty() ? trace.initial_energy : trace.steps.back().energy.total;
    out.summary["dissipation"] = trace.dissipation;
    out.summary["max_monotonicity_violation"] = trace.max_monotonicity_violation;
    out.summary["volume_initial"] = filmflow::volume(trace.profiles.front());
    out.summary["volume_final"] = filmflow::volume(trace.profiles.back());
    out.summary["output_dir"] = run.output_dir;
    log << timestamp() << " done: " << reason << '\n';
    return out;
}

void write_stability_rows(const std::vector<filmflow::StabilityRow>& rows,
                          const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "'");
    out << "d,k,sv_elastic,sv_surface,sv_curvature,sv_total\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g,%.17g,%.17g,%.17g\n", r.d, r.k,
                      r.sv.elastic, r.sv.surface, r.sv.curvature, r.sv.total);
        out << buf;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"filmflow: strained-film evolution by anisotropic surface diffusion"};
    app.require_subcommand(1);

    // ---- evolve ----
    auto* evolve_cmd = app.add_subcommand("evolve", "run a minimizing-movements evolution");
    std::string config_path;
    std::vector<std::string> overrides;
    evolve_cmd->add_option("--config", config_path, "INI config file")->required();
    evolve_cmd->add_option("--set", overrides, "override, e.g. flow.tau=1e-3");

    // ---- stability ----
    auto* stab_cmd = app.add_subcommand("stability", "flat-film linear stability scan");
    double sb = 2.0 * 3.14159265358979323846;
    double smu = 1.0, slambda = 1.0, se0 = 0.6, spsi11 = 1.0;
    bool numeric = false;
    int snx = 256, sny = 64, skmax = 8;
    double sd_lo = 0.0, sd_hi = 0.0, srel = 1e-2;
    std::string rows_path;
    stab_cmd->add_option("--b", sb, "period");
    stab_cmd->add_option("--mu", smu, "shear modulus");
    stab_cmd->add_option("--lambda", slambda, "first Lame parameter");
    stab_cmd->add_option("--e0", se0, "mismatch strain");
    stab_cmd->add_option("--psi11", spsi11, "tangential stiffness of the surface density");
    stab_cmd->add_flag("--numeric", numeric, "locate the threshold with the FEM second variation");
    stab_cmd->add_option("--nx", snx, "FEM cells along the period");
    stab_cmd->add_option("--ny", sny, "FEM cells through the film");
    stab_cmd->add_option("--kmax", skmax, "largest wavenumber scanned");
    stab_cmd->add_option("--d-lo", sd_lo, "bracket start (default d_loc/2)");
    stab_cmd->add_option("--d-hi", sd_hi, "bracket end (default 2 d_loc)");
    stab_cmd->add_option("--rel-tol", srel, "bisection relative tolerance");
    stab_cmd->add_option("--rows", rows_path, "CSV path for evaluated second variations");

    // ---- liapunov ----
    auto* lia_cmd = app.add_subcommand("liapunov", "nonlinear decay/growth experiment");
    filmflow::LiapunovConfig lia;
    lia_cmd->add_option("--d", lia.d, "film thickness");
    lia_cmd->add_option("--b", lia.b, "period");
    lia_cmd->add_option("--k", lia.k, "perturbed wavenumber");
    lia_cmd->add_option("--amplitude-rel", lia.amplitude_rel, "amplitude / thickness");
    lia_cmd->add_option("--n", lia.n, "grid points");
    lia_cmd->add_option("--ny", lia.ny, "FEM cells through the film");
    lia_cmd->add_option("--steps", lia.steps, "time steps");
    lia_cmd->add_option("--tau", lia.tau, "time step");
    lia_cmd->add_option("--epsilon", lia.epsilon, "curvature regularization weight");
    lia_cmd->add_option("--mu", lia.lame.mu, "shear modulus");
    lia_cmd->add_option("--lambda", lia.lame.lambda, "first Lame parameter");
    lia_cmd->add_option("--e0", lia.lame.e0, "mismatch strain");

    // ---- probe ----
    auto* probe_cmd = app.add_subcommand("probe", "randomized functional-inequality check");
    std::string probe_id = "A";
    int trials = 200;
    std::uint64_t seed = 1;
    filmflow::ProbeParams pp;
    probe_cmd->add_option("--id", probe_id, "A, C, D, H1, or morini")->required();
    probe_cmd->add_option("--trials", trials, "number of random trials");
    probe_cmd->add_option("--seed", seed, "RNG seed");
    probe_cmd->add_option("--dim", pp.dim, "1 or 2");
    probe_cmd->add_option("--n", pp.n, "grid points per axis");
    probe_cmd->add_option("--b", pp.b, "period");
    probe_cmd->add_option("--degree", pp.degree, "band limit (0 = n/4)");
    probe_cmd->add_option("--decay", pp.decay, "coefficient decay exponent");
    probe_cmd->add_option("--p", pp.p, "base exponent (inf allowed)");
    probe_cmd->add_option("--q", pp.q, "target exponent");
    probe_cmd->add_option("--j", pp.j, "intermediate derivative order");
    probe_cmd->add_option("--m", pp.m, "top derivative order");
    probe_cmd->add_option("--s", pp.s, "bottom derivative order");

    // ---- sweep ----
    auto* sweep_cmd = app.add_subcommand("sweep", "run evolve over a list of parameter values");
    std::string sweep_config, sweep_param, sweep_values;
    int jobs = 1;
    std::vector<std::string> sweep_sets;
    sweep_cmd->add_option("--config", sweep_config, "INI config file")->required();
    sweep_cmd->add_option("--param", sweep_param, "key to vary, e.g. flow.tau")->required();
    sweep_cmd->add_option("--values", sweep_values, "comma-separated values")->required();
    sweep_cmd->add_option("--jobs", jobs, "parallel workers");
    sweep_cmd->add_option("--set", sweep_sets, "fixed override, e.g. flow.steps=50");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*evolve_cmd) {
            filmflow::Config cfg = filmflow::Config::parse_file(config_path);
            EvolveOutcome out = run_evolution(std::move(cfg), overrides);
            std::cout << out.summary.dump(2) << '\n';
            return out.exit_code;
        }

        if (*stab_cmd) {
            filmflow::LameParams lame{smu, slambda, se0};
            lame.validate();
            filmflow::StabilityScan scan;
            scan.nu = filmflow::poisson_modulus(lame);
            scan.rhs = filmflow::threshold_rhs(sb, lame, spsi11);
            scan.d_loc = filmflow::local_min_thickness(sb, lame, spsi11);
            json j;
            j["nu"] = scan.nu;
            j["rhs"] = scan.rhs;
            j["d_loc"] = finite_or_string(scan.d_loc);
            if (numeric) {
                if (!std::isfinite(scan.d_loc))
                    throw std::runtime_error(
                        "numeric threshold needs a finite local threshold (rhs < 1)");
                const double lo = sd_lo > 0 ? sd_lo : 0.5 * scan.d_loc;
                const double hi = sd_hi > 0 ? sd_hi : 2.0 * scan.d_loc;
                scan.numeric_threshold = filmflow::numeric_flat_threshold(
                    sb, lame, spsi11, snx, sny, skmax, lo, hi, srel, &scan.rows);
                j["numeric_threshold"] = *scan.numeric_threshold;
                j["relative_gap"] =
                    std::abs(*scan.numeric_threshold - scan.d_loc) / scan.d_loc;
                if (!rows_path.empty()) write_stability_rows(scan.rows, rows_path);
            }
            std::cout << j.dump(2) << '\n';
            return kExitOk;
        }

        if (*lia_cmd) {
            filmflow::LiapunovResult res = filmflow::liapunov_experiment(lia);
            json j;
            const char* cls =
                res.classification == filmflow::LiapunovResult::Class::decay    ? "decay"
                : res.classification == filmflow::LiapunovResult::Class::growth ? "growth"
                                                                                : "inconclusive";
            j["classification"] = cls;
            j["initial_deviation"] = res.initial_deviation;
            j["final_deviation"] = res.final_deviation;
            j["ratio"] = res.final_deviation / res.initial_deviation;
            j["steps_taken"] = res.trace.steps.size();
            std::cout << j.dump(2) << '\n';
            return kExitOk;
        }

        if (*probe_cmd) {
            filmflow::ProbeReport rep = filmflow::run_probe(
                filmflow::probe_id_from_string(probe_id), pp, trials, seed);
            json j;
            j["id"] = filmflow::to_string(rep.id);
            j["trials"] = rep.trials;
            j["seed"] = rep.seed;
            j["cap"] = rep.cap;
            j["worst_ratio"] = rep.worst_ratio;
            j["worst_trial"] = rep.worst_trial;
            j["mean_ratio"] = rep.mean_ratio;
            j["max_homogeneity_dev"] = rep.max_homogeneity_dev;
            j["capped"] = rep.capped;
            j["params"] = {{"dim", rep.params.dim}, {"n", rep.params.n},
                           {"b", rep.params.b},     {"degree", rep.params.degree},
                           {"decay", rep.params.decay}, {"p", finite_or_string(rep.params.p)},
                           {"q", finite_or_string(rep.params.q)}, {"j", rep.params.j},
                           {"m", rep.params.m},     {"s", rep.params.s}};
            std::cout << j.dump(2) << '\n';
            return rep.capped ? kExitOk : kExitProbeViolation;
        }

        if (*sweep_cmd) {
            const std::size_t dot = sweep_param.find('.');
            if (dot == std::string::npos)
                throw std::runtime_error("--param expects section.key");
            std::vector<std::string> values;
            {
                std::stringstream ss(sweep_values);
                std::string cell;
                while (std::getline(ss, cell, ',')) values.push_back(cell);
            }
            if (values.empty()) throw std::runtime_error("--values is empty");

            filmflow::Config base = filmflow::Config::parse_file(sweep_config);
            const std::string base_dir = [&] {
                filmflow::Config probe_cfg = base;
                apply_overrides(probe_cfg, sweep_sets);
                return probe_cfg.get_string("output", "directory", ".");
            }();

            std::vector<json> results(values.size());
            std::vector<int> codes(values.size(), kExitOk);
            std::atomic<std::size_t> next{0};
            std::mutex io_mutex;
            auto worker = [&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= values.size()) return;
                    filmflow::Config cfg = base;
                    std::vector<std::string> sets = sweep_sets;
                    sets.push_back(sweep_param + "=" + values[i]);
                    const std::string dir = base_dir + "/" + values[i];
                    sets.push_back("output.directory=" + dir);
                    json entry;
                    entry["value"] = values[i];
                    entry["dir"] = dir;
                    try {
                        EvolveOutcome out = run_evolution(std::move(cfg), sets);
                        entry["summary"] = out.summary;
                        codes[i] = out.exit_code;
                    } catch (const std::exception& e) {
                        entry["error"] = e.what();
                        codes[i] = kExitError;
                    }
                    std::lock_guard<std::mutex> lk(io_mutex);
                    results[i] = std::move(entry);
                }
            };
            const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(values.size())));
            std::vector<std::thread> pool;
            for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
            for (auto& th : pool) th.join();

            json j = json::array();
            int worst = kExitOk;
            for (std::size_t i = 0; i < values.size(); ++i) {
                j.push_back(results[i]);
                worst = std::max(worst, codes[i]);
            }
            std::cout << j.dump(2) << '\n';
            return worst;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
