// sparse_city: command-line driver for the sparsecity library.
//
// Every subcommand writes its result to --out (stdout by default). CSV rows
// carry a manifest_hash column; JSON documents carry the full manifest.
//
// Exit codes: 0 ok, 2 bad arguments, 3 enumeration budget exceeded,
// 4 solver did not converge (the result is still written).

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "sparsecity/baselines.hpp"
#include "sparsecity/csv.hpp"
#include "sparsecity/embedding.hpp"
#include "sparsecity/manifest.hpp"
#include "sparsecity/recovery.hpp"
#include "sparsecity/rip.hpp"
#include "sparsecity/sparse_city.hpp"

namespace sc = sparsecity;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitArgs = 2;
constexpr int kExitBudget = 3;
constexpr int kExitSolver = 4;

struct Common {
    std::string out = "-";
    unsigned threads = 1;
};

struct Ensemble {
    sc::Index m = 64, n = 8, b = 8;
    std::uint64_t seed = 0;
    std::string dist = "fourpoint";
    bool unnormalized = false;

    sc::ThetaDistribution theta() const { return sc::theta_by_name(dist, !unnormalized); }
    sc::SparseCityMatrix build() const { return sc::SparseCityMatrix(m, n, b, seed, theta()); }
    nlohmann::json params() const {
        return {{"m", m}, {"n", n}, {"b", b}, {"seed", seed}, {"dist", dist}, {"normalized", !unnormalized}};
    }
};

void add_ensemble(CLI::App* cmd, Ensemble& e) {
    cmd->add_option("--m", e.m, "rows (power of two)")->capture_default_str();
    cmd->add_option("--n", e.n, "columns per block, n <= m")->capture_default_str();
    cmd->add_option("--b", e.b, "number of blocks")->capture_default_str();
    cmd->add_option("--seed", e.seed, "ensemble seed")->capture_default_str();
    cmd->add_option("--dist", e.dist, "theta law: fourpoint | rademacher")->capture_default_str();
    cmd->add_flag("--unnormalized", e.unnormalized, "use the raw {+-1,+-3} law");
}

void write(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw sc::domain_error("cannot open '" + path + "' for writing");
    f << text;
}

std::string json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::string dense_csv(const sc::Matrix& a, const std::string& hash) {
    std::string out;
    for (sc::Index i = 0; i < a.rows(); ++i) {
        for (sc::Index j = 0; j < a.cols(); ++j) {
            out += sc::csv::format(a(i, j));
            out += ',';
        }
        out += hash;
        out += '\n';
    }
    return out;
}

void warn_regime(sc::Index m, sc::Index n, sc::Index b) {
    if (m > n * b)
        std::cerr << "warning: m = " << m << " > nb = " << n * b
                  << "; outside the m <= nb regime of the norm bounds\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse City measurement matrices: construction, RIP diagnostics, recovery, embedding"};
    app.set_config("--config", "", "key = value file supplying defaults; flags override");
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("--out,-o", common.out, "output file, '-' for stdout")->capture_default_str();
    app.add_option("--threads", common.threads, "worker threads (output does not depend on it)")
        ->check(CLI::Range(1u, 256u))
        ->capture_default_str();

    // gen
    auto* gen = app.add_subcommand("gen", "construct a matrix and write its manifest");
    Ensemble gen_e;
    std::string gen_dense;
    add_ensemble(gen, gen_e);
    gen->add_option("--dense", gen_dense, "also dump the dense matrix as CSV");

    // rip
    auto* rip = app.add_subcommand("rip", "restricted isometry constants");
    Ensemble rip_e;
    add_ensemble(rip, rip_e);
    std::string rip_method = "exact";
    sc::Index rip_s = 2;
    std::int64_t rip_trials = 50, rip_supports = 2000, rip_budget = sc::kEnumerationBudget;
    double rip_delta = 0.8;
    std::vector<sc::Index> rip_grid{32, 64, 128, 256};
    rip->add_option("--method", rip_method, "exact | monte-carlo | scan | tail")
        ->check(CLI::IsMember({"exact", "monte-carlo", "scan", "tail"}))
        ->capture_default_str();
    rip->add_option("--s", rip_s, "sparsity level")->capture_default_str();
    rip->add_option("--trials", rip_trials, "matrices per grid point (scan, tail)")->capture_default_str();
    rip->add_option("--supports", rip_supports, "random supports (monte-carlo)")->capture_default_str();
    rip->add_option("--budget", rip_budget, "max supports for exact enumeration")->capture_default_str();
    rip->add_option("--delta", rip_delta, "tail threshold")->capture_default_str();
    rip->add_option("--grid", rip_grid, "m values for scan/tail")->delimiter(',')->capture_default_str();

    // recover
    auto* recover = app.add_subcommand("recover", "recover one random sparse signal");
    Ensemble rec_e;
    add_ensemble(recover, rec_e);
    sc::Index rec_s = 3;
    std::uint64_t rec_signal_seed = 1;
    std::string rec_solver = "omp";
    recover->add_option("--s", rec_s, "signal sparsity")->capture_default_str();
    recover->add_option("--signal-seed", rec_signal_seed, "seed of the sparse signal")->capture_default_str();
    recover->add_option("--solver", rec_solver, "omp | iht | basis_pursuit")->capture_default_str();

    // phase
    auto* phase = app.add_subcommand("phase", "recovery rate versus sparsity");
    Ensemble ph_e;
    add_ensemble(phase, ph_e);
    std::vector<sc::Index> ph_grid{1, 2, 3, 4, 6, 8, 12, 16};
    std::int64_t ph_trials = 100;
    std::string ph_solver = "omp";
    phase->add_option("--s-grid", ph_grid, "sparsity levels")->delimiter(',')->capture_default_str();
    phase->add_option("--trials", ph_trials, "trials per level")->capture_default_str();
    phase->add_option("--solver", ph_solver, "omp | iht | basis_pursuit")->capture_default_str();

    // embed
    auto* embed = app.add_subcommand("embed", "JL distortion or SRC classification");
    Ensemble em_e;
    em_e.m = 32;
    em_e.n = 32;
    em_e.b = 4;
    add_ensemble(embed, em_e);
    std::string em_mode = "classify";
    std::int64_t em_points = 20, em_trials = 100;
    double em_eps = 0.5, em_noise = 0.0;
    sc::Index em_k = 5, em_subspace = 4, em_samples = 10;
    std::string em_solver = "omp";
    bool em_no_project = false, em_raw_columns = false;
    embed->add_option("--mode", em_mode, "distortion | classify")
        ->check(CLI::IsMember({"distortion", "classify"}))
        ->capture_default_str();
    embed->add_option("--points", em_points, "random points (distortion)")->capture_default_str();
    embed->add_option("--eps", em_eps, "distortion tolerance")->capture_default_str();
    embed->add_option("--trials", em_trials, "classification trials")->capture_default_str();
    embed->add_option("--classes", em_k, "classes")->capture_default_str();
    embed->add_option("--subspace", em_subspace, "subspace dimension per class")->capture_default_str();
    embed->add_option("--samples", em_samples, "training samples per class")->capture_default_str();
    embed->add_option("--noise", em_noise, "sample noise level")->capture_default_str();
    embed->add_option("--solver", em_solver, "omp | basis_pursuit")->capture_default_str();
    embed->add_flag("--no-project", em_no_project, "classify in the ambient space only");
    embed->add_flag("--raw-columns", em_raw_columns, "do not normalize dictionary columns");

    // baseline
    auto* baseline = app.add_subcommand("baseline", "comparison ensembles");
    std::string bl_kind = "subsampled_hadamard";
    sc::Index bl_m = 16, bl_n = 64, bl_w = 12, bl_r = 3, bl_s = 0;
    std::uint64_t bl_seed = 0;
    std::string bl_dense;
    baseline->add_option("--kind", bl_kind,
                         "subsampled_fourier | subsampled_hadamard | partial_toeplitz | partial_circulant | "
                         "random_demodulator")
        ->capture_default_str();
    baseline->add_option("--m", bl_m, "rows")->capture_default_str();
    baseline->add_option("--N", bl_n, "columns")->capture_default_str();
    baseline->add_option("--W", bl_w, "demodulator bandwidth")->capture_default_str();
    baseline->add_option("--R", bl_r, "demodulator sampling rate")->capture_default_str();
    baseline->add_option("--seed", bl_seed, "seed")->capture_default_str();
    baseline->add_option("--rip-s", bl_s, "also report exact delta_s (0: skip)")->capture_default_str();
    baseline->add_option("--dense", bl_dense, "also dump the dense matrix as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitArgs;
    }

    try {
        if (*gen) {
            const auto a = gen_e.build();
            auto params = gen_e.params();
            const sc::ExperimentManifest manifest{"gen", params};
            nlohmann::json doc{{"matrix", a.to_json()},
                               {"rows", a.rows()},
                               {"cols", a.cols()},
                               {"in_theorem_regime", a.in_theorem_regime()},
                               {"manifest", manifest.to_json()}};
            if (!gen_dense.empty()) {
                write(gen_dense, dense_csv(a.to_dense(), manifest.hash()));
                doc["dense"] = gen_dense;
            }
            write(common.out, json_text(doc));
            return kExitOk;
        }

        if (*rip) {
            auto params = rip_e.params();
            params["method"] = rip_method;
            params["s"] = rip_s;
            sc::RipOptions ropt;
            ropt.budget = rip_budget;
            if (rip_method == "exact" || rip_method == "monte-carlo") {
                warn_regime(rip_e.m, rip_e.n, rip_e.b);
                const auto a = rip_e.build();
                sc::RipReport report;
                if (rip_method == "exact") {
                    params["budget"] = rip_budget;
                    report = sc::delta_exact(a, rip_s, ropt);
                } else {
                    params["supports"] = rip_supports;
                    report = sc::delta_monte_carlo(a, rip_s, rip_supports, rip_e.seed, common.threads);
                }
                const sc::ExperimentManifest manifest{"rip", params};
                write(common.out, json_text({{"report", report.to_json()}, {"manifest", manifest.to_json()}}));
                return kExitOk;
            }
            params.erase("m");
            params["grid_m"] = rip_grid;
            params["trials"] = rip_trials;
            params["budget"] = rip_budget;
            params["supports"] = rip_supports;
            sc::ScanOptions sopt;
            sopt.rip = ropt;
            sopt.mc_supports = rip_supports;
            sopt.threads = common.threads;
            sopt.dist = rip_e.theta();
            std::vector<sc::GridPoint> grid;
            for (auto m : rip_grid) {
                warn_regime(m, rip_e.n, rip_e.b);
                grid.push_back({m, rip_e.n, rip_e.b});
            }
            if (rip_method == "scan") {
                const sc::ExperimentManifest manifest{"rip.scan", params};
                const auto rows = sc::expectation_scan(grid, rip_s, rip_trials, rip_e.seed, sopt);
                write(common.out, sc::scaling_csv(rows, manifest.hash()));
                return kExitOk;
            }
            params["delta"] = rip_delta;
            const sc::ExperimentManifest manifest{"rip.tail", params};
            std::string out;
            sc::csv::row(out, "m", "n", "b", "s", "delta", "trials", "exceedances", "probability", "method",
                         "in_theorem_regime", "manifest_hash");
            for (const auto& g : grid) {
                const auto t = sc::tail_estimate(g, rip_s, rip_delta, rip_trials, rip_e.seed, sopt);
                sc::csv::row(out, g.m, g.n, g.b, rip_s, rip_delta, t.trials, t.exceedances, t.probability,
                             sc::to_string(t.method), t.in_theorem_regime, manifest.hash());
            }
            write(common.out, out);
            return kExitOk;
        }

        if (*recover) {
            const auto solver = sc::solver_from_string(rec_solver);
            const auto a = rec_e.build();
            const sc::Vector x = sc::random_sparse_signal(a.cols(), rec_s, rec_signal_seed);
            const sc::SolverOptions sopt;
            auto params = rec_e.params();
            params["s"] = rec_s;
            params["signal_seed"] = rec_signal_seed;
            params["solver"] = sc::to_string(solver);
            params["solver_options"] = sopt.to_json();
            const sc::ExperimentManifest manifest{"recover", params};
            const auto r = sc::solve(sc::make_problem(a, a.apply(x), rec_s, x), solver, sopt);
            write(common.out, json_text({{"result", r.to_json()}, {"manifest", manifest.to_json()}}));
            if (r.status != sc::RecoveryStatus::converged) {
                std::cerr << "error: solver stopped with status " << sc::to_string(r.status) << "\n";
                return kExitSolver;
            }
            return kExitOk;
        }

        if (*phase) {
            const auto solver = sc::solver_from_string(ph_solver);
            sc::PhaseOptions popt;
            popt.threads = common.threads;
            auto params = ph_e.params();
            params["s_grid"] = ph_grid;
            params["trials"] = ph_trials;
            params["solver"] = sc::to_string(solver);
            params["solver_options"] = popt.solver.to_json();
            const sc::ExperimentManifest manifest{"phase", params};
            const auto rows =
                sc::phase_transition(ph_e.m, ph_e.n, ph_e.b, ph_grid, ph_trials, solver, ph_e.seed, popt, ph_e.theta());
            write(common.out, sc::phase_csv(rows, manifest.hash()));
            return kExitOk;
        }

        if (*embed) {
            auto params = em_e.params();
            params["mode"] = em_mode;
            if (em_mode == "distortion") {
                params["points"] = em_points;
                params["eps"] = em_eps;
                const auto a = em_e.build();
                const auto p = sc::make_projector(a, sc::derive_seed(em_e.seed, 1));
                std::vector<sc::Vector> pts;
                const sc::CounterRng rng(sc::derive_seed(em_e.seed, 2), 0);
                for (std::int64_t i = 0; i < em_points; ++i) {
                    sc::Vector v(a.cols());
                    for (sc::Index j = 0; j < v.size(); ++j)
                        v(j) = rng.normal(static_cast<std::uint64_t>(i * a.cols() + j));
                    pts.push_back(std::move(v));
                }
                const auto r = sc::distortion_report(p, pts, em_eps);
                const sc::ExperimentManifest manifest{"embed.distortion", params};
                write(common.out, json_text({{"max_distortion", r.max_distortion},
                                             {"violations", r.violations},
                                             {"pairs", r.pairs},
                                             {"duplicates", r.duplicates},
                                             {"manifest", manifest.to_json()}}));
                return kExitOk;
            }
            sc::ClassificationSpec spec;
            spec.data.k = em_k;
            spec.data.ambient = em_e.n * em_e.b;
            spec.data.subspace_dim = em_subspace;
            spec.data.samples_per_class = em_samples;
            spec.data.noise = em_noise;
            spec.m = em_e.m;
            spec.n = em_e.n;
            spec.b = em_e.b;
            spec.project = !em_no_project;
            spec.trials = em_trials;
            spec.seed = em_e.seed;
            spec.dist = em_e.theta();
            spec.src.solver = sc::solver_from_string(em_solver);
            spec.src.normalize_columns = !em_raw_columns;
            spec.threads = common.threads;
            const auto report = sc::classification_experiment(spec);
            write(common.out, json_text(report.to_json()));
            if (report.nonconverged > 0) {
                std::cerr << "error: " << report.nonconverged << " trial(s) did not converge\n";
                return kExitSolver;
            }
            return kExitOk;
        }

        if (*baseline) {
            const auto kind = sc::baseline_kind_from_string(bl_kind);
            const auto a = [&] {
                switch (kind) {
                    case sc::BaselineKind::subsampled_fourier:
                    case sc::BaselineKind::subsampled_hadamard:
                        return sc::BaselineMatrix::subsampled_orthogonal(kind, bl_m, bl_n, bl_seed);
                    case sc::BaselineKind::partial_toeplitz:
                    case sc::BaselineKind::partial_circulant:
                        return sc::BaselineMatrix::partial_toeplitz(bl_m, bl_n, bl_seed,
                                                                    kind == sc::BaselineKind::partial_circulant);
                    case sc::BaselineKind::random_demodulator: break;
                }
                return sc::BaselineMatrix::random_demodulator(bl_w, bl_r, bl_seed);
            }();
            auto params = a.to_json();
            params["rip_s"] = bl_s;
            const sc::ExperimentManifest manifest{"baseline", params};
            nlohmann::json doc{{"matrix", a.to_json()},
                               {"rows", a.rows()},
                               {"cols", a.cols()},
                               {"column_norms", a.column_norm_stats()},
                               {"manifest", manifest.to_json()}};
            if (bl_s > 0) doc["rip"] = sc::delta_exact(a, bl_s).to_json();
            if (!bl_dense.empty()) {
                write(bl_dense, dense_csv(a.to_dense(), manifest.hash()));
                doc["dense"] = bl_dense;
            }
            write(common.out, json_text(doc));
            return kExitOk;
        }
    } catch (const sc::budget_error& e) {
        std::cerr << "error: " << e.what() << "\n"
                  << "hint: use --method monte-carlo for sizes beyond the enumeration budget\n";
        return kExitBudget;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitArgs;
    }
    return kExitArgs;
}
