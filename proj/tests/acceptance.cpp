// Acceptance suite: runs every reproduction experiment at full size, writes
// the CSV tables under --out, and prints one PASS/FAIL line per criterion.

#include "oracles.hpp"
#include "projhead/asymptotics.hpp"
#include "projhead/downstream.hpp"
#include "projhead/gmm.hpp"
#include "projhead/harness.hpp"
#include "projhead/inhomo.hpp"
#include "projhead/loss.hpp"
#include "projhead/phase.hpp"
#include "projhead/trainer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace projhead;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Drops the line carrying the wall-clock timestamp from a metadata sidecar.
std::string without_timestamp(const std::string& text) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line))
        if (line.find("\"timestamp\"") == std::string::npos) out += line + "\n";
    return out;
}

struct Context {
    fs::path out;
    int jobs = 1;
    // Specs of the experiment runs, rerun for the determinism criterion.
    std::vector<ExperimentSpec> runs;
};

ResultTable run_and_write(Context& ctx, const ExperimentSpec& spec, const std::string& sub) {
    const ResultTable t = run_experiment(spec, RunOptions{ctx.jobs});
    write_outputs(t, spec, (ctx.out / sub).string(), true);
    ctx.runs.push_back(spec);
    return t;
}

// Groups row indices by a key column (numeric).
std::map<double, std::vector<std::size_t>> group_by(const ResultTable& t, const std::string& col) {
    std::map<double, std::vector<std::size_t>> g;
    const auto v = t.numbers(col);
    for (std::size_t i = 0; i < v.size(); ++i) g[v[i]].push_back(i);
    return g;
}

double mean_of(const std::vector<double>& v, const std::vector<std::size_t>& idx) {
    double s = 0.0;
    for (auto i : idx) s += v[i];
    return s / static_cast<double>(idx.size());
}

// 1. Expansion/shrinkage heatmap from trained projectors.
Outcome phase_transition(Context& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentSpec spec = default_spec(ExperimentKind::PhaseHeatmap);
    const ResultTable t = run_and_write(ctx, spec, "phase_heatmap");
    const double secs = seconds_since(t0);

    const auto sigma = t.numbers("sigma_aug"), tau = t.numbers("tau"), T = t.numbers("T_empirical");
    const auto ts = t.numbers("tau_star");
    bool ok = t.flagged_cells == 0;
    double min_hi = 1.0, max_lo = 0.0, worst_flip = 0.0;
    int n_hi = 0, n_lo = 0;
    for (const auto& [s, idx] : group_by(t, "sigma_aug")) {
        std::vector<std::size_t> order = idx;
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return tau[a] < tau[b]; });
        const double tstar = ts[order.front()];
        for (auto i : order) {
            if (tau[i] >= 2.0 * tstar) {
                ++n_hi;
                min_hi = std::min(min_hi, T[i]);
                ok = ok && T[i] >= 0.9;
            }
            if (tau[i] <= tstar / 2.0) {
                ++n_lo;
                max_lo = std::max(max_lo, T[i]);
                ok = ok && T[i] <= 0.1;
            }
        }
        // Position of the trend flip (first cell at or above 0.5, minus half a
        // step) against the fractional grid position of tau*.
        std::size_t k = 0;
        while (k < order.size() && T[order[k]] < 0.5) ++k;
        if (k == 0 || k == order.size()) {
            ok = false;
            worst_flip = INFINITY;
            continue;
        }
        const double step = std::log(tau[order[1]] / tau[order[0]]);
        const double pos_star = std::log(tstar / tau[order[0]]) / step;
        const double pos_flip = static_cast<double>(k) - 0.5;
        worst_flip = std::max(worst_flip, std::abs(pos_star - pos_flip));
    }
    (void)sigma;
    ok = ok && worst_flip <= 1.0 && secs <= 600.0 && n_hi > 0 && n_lo > 0;
    return {ok, "min T (tau>=2tau*, " + std::to_string(n_hi) + " cells) " + fmt("%.4f", min_hi) +
                    ", max T (tau<=tau*/2, " + std::to_string(n_lo) + " cells) " + fmt("%.4f", max_lo) +
                    ", flip offset " + fmt("%.2f", worst_flip) + " grid steps, " + fmt("%.0f", secs) + " s"};
}

// 2. Closed-form threshold and shrinkage optimum.
Outcome threshold_formulas(Context&) {
    const double s2 = 1.0, m = 25.0;
    const double formula = 50.0 / (27.0 * std::log(3.0));
    const double lo = t_interval(s2, m).lo;
    // Root in tau of F(left endpoint) = 0, bracketed around the formula.
    const double root = bisect_root([&](double tau) { return phase_derivative_F(lo, PhaseConfig{s2, tau, m}); }, 0.1, 100.0, 0.0);
    const double e1 = std::abs(root - formula), e2 = std::abs(tau_star(s2, m) - formula);
    const double ts = shrinkage_t_star(1.0, 0.5), want = 0.5 * (1.0 - 0.25 * std::log(3.0));
    const double e3 = std::abs(ts - want);
    const bool ok = e1 <= 1e-10 && e2 <= 1e-10 && e3 <= 1e-12;
    return {ok, "|root - 50/(27 ln 3)| " + fmt("%.1e", e1) + ", |tau_star - formula| " + fmt("%.1e", e2) +
                    ", |t* - 0.5(1-0.25 ln 3)| " + fmt("%.1e", e3)};
}

// 3. Sandwich bounds on random instances and Monte Carlo of the modified loss.
Outcome sandwich_and_monte_carlo(Context& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(20240301);
    double worst_lower = -INFINITY, worst_upper = -INFINITY;
    for (int rep = 0; rep < 100; ++rep) {
        const int p = 2 + static_cast<int>(rng.below(9));
        const double sigma = 0.1 + 2.0 * rng.uniform(), tau = 0.05 + 5.0 * rng.uniform();
        const LossContext lc{make_homogeneous(3.0 * rng.uniform() * rng.normal_vector(p), sigma), tau};
        const Projector W(rng.normal_matrix(p, p));
        const double L = population_loss(W, lc).total, La = approx_loss(W, lc), D = sandwich_upper_delta(W, lc);
        worst_lower = std::max(worst_lower, La - L);
        worst_upper = std::max(worst_upper, L - (La + D));
    }
    std::ofstream csv(ctx.out / "monte_carlo.csv", std::ios::binary);
    csv << "instance,p,sigma_aug,tau,closed_form,mc_mean,mc_se,z\n";
    double worst_z = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        const int p = 2 + static_cast<int>(rng.below(9));
        const double sigma = 0.2 + 1.5 * rng.uniform(), tau = 0.2 + 3.0 * rng.uniform();
        const GmmConfig cfg = make_homogeneous(2.0 * rng.normal_vector(p) / std::sqrt(static_cast<double>(p)), sigma);
        const Mat W = rng.normal_matrix(p, p);
        const double L = population_loss(Projector(W), LossContext{cfg, tau}).total;
        const oracle::McEstimate mc = oracle::modified_loss_monte_carlo(W, cfg, tau, 200000, 1000 + rep);
        const double z = std::abs(L - mc.mean) / mc.se;
        worst_z = std::max(worst_z, z);
        csv << rep << ',' << p << ',' << sigma << ',' << tau << ',' << fmt("%.17g", L) << ',' << fmt("%.17g", mc.mean) << ','
            << fmt("%.17g", mc.se) << ',' << fmt("%.6f", z) << '\n';
    }
    const double secs = seconds_since(t0);
    const bool ok = worst_lower <= 1e-10 && worst_upper <= 1e-10 && worst_z <= 3.0 && secs <= 300.0;
    return {ok, "max(L~ - L) " + fmt("%.1e", worst_lower) + ", max(L - L~ - D) " + fmt("%.1e", worst_upper) +
                    ", worst MC deviation " + fmt("%.2f", worst_z) + " SE over 10 instances, " + fmt("%.0f", secs) + " s"};
}

// 4. Analytic SimCLR gradient against central differences.
Outcome gradient_check(Context&) {
    Rng rng(77);
    double worst = 0.0;
    for (int state = 0; state < 10; ++state) {
        const int p = 4 + state % 5;
        const GmmConfig cfg = make_homogeneous(2.0 * rng.normal_vector(p), 0.5 + 0.1 * state);
        const Dataset d = sample_dataset(cfg, 12, 500 + state);
        Rng aug(900 + state);
        const Mat A = augment_rows(cfg, d.features, aug), B = augment_rows(cfg, d.features, aug);
        const Mat W = rng.normal_matrix(p, p);
        const double tau = 0.2 + 0.5 * state;
        Mat G;
        simclr_loss_and_grad(W, A, B, tau, G);
        for (int dir = 0; dir < 10; ++dir) {
            const Mat D = rng.normal_matrix(p, p);
            const double h = 1e-6;
            const double fd = (simclr_loss(W + h * D, A, B, tau).total - simclr_loss(W - h * D, A, B, tau).total) / (2 * h);
            const double an = (G.array() * D.array()).sum();
            worst = std::max(worst, std::abs(fd - an) / std::abs(an));
        }
    }
    return {worst <= 1e-5, "worst relative error " + fmt("%.2e", worst) + " over 10 states x 10 directions"};
}

// 5. Scalar system of the high-dimensional max-margin theory.
Outcome cgmt_system(Context& ctx) {
    const double d0 = std::abs(delta_star(0.0) - 2.0);
    ExperimentSpec spec = default_spec(ExperimentKind::CgmtTable);
    const ResultTable t = run_and_write(ctx, spec, "cgmt_table");
    double worst_kkt = 0.0;
    const auto delta = t.numbers("delta"), rho = t.numbers("rho"), eta = t.numbers("eta"), k = t.numbers("kappa_star"),
               u = t.numbers("u_star");
    const auto regime = t.texts("regime");
    const auto err = t.numbers("predicted_error");
    int solved = 0, pure_noise = 0;
    bool noise_ok = true;
    for (std::size_t i = 0; i < delta.size(); ++i) {
        if (regime[i] != "separable") continue;
        if (rho[i] == 0.0) {
            // No finite KKT pair exists without signal: kappa* must be the
            // tail level, u* unbounded and the error exactly 1/2.
            ++pure_noise;
            noise_ok = noise_ok && std::isinf(u[i]) && err[i] == 0.5 &&
                       std::abs(k[i] - std::max(kappa_tail(delta[i]), 0.0)) <= 1e-9;
            continue;
        }
        ++solved;
        worst_kkt = std::max(worst_kkt, std::abs(f_delta(u[i], k[i], AsymptoticProblem::make(delta[i], rho[i], eta[i]))));
    }
    bool monotone = true;
    double prev = 0.0;
    std::string us;
    for (double c : {0.1, 0.25, 0.5, 1.0, 2.0}) {
        const AsymptoticProblem p = AsymptoticProblem::make(0.5, 3.0, 1.0 / std::sqrt(c) - 1.0);
        const double ks = solve_kappa_star(p), uu = solve_u_star(p, ks);
        worst_kkt = std::max(worst_kkt, std::abs(f_delta(uu, ks, p)));
        monotone = monotone && uu > prev;
        prev = uu;
        us += (us.empty() ? "" : ", ") + fmt("%.4f", uu);
    }
    const bool ok = d0 <= 1e-6 && worst_kkt <= 1e-6 && monotone && solved > 0 && noise_ok;
    return {ok, "|delta*(0) - 2| " + fmt("%.1e", d0) + ", max |f_delta(u*,kappa*,c)| " + fmt("%.1e", worst_kkt) + " over " +
                    std::to_string(solved + 5) + " finite solves, " + std::to_string(pure_noise) +
                    " rho=0 rows at the tail level with u* = inf" + (noise_ok ? "" : " (MISMATCH)") + ", u*(c) = " + us};
}

// 6. Empirical max-margin error against the asymptotic prediction.
Outcome eta_sweep(Context& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentSpec spec = default_spec(ExperimentKind::EtaSweep);
    const ResultTable t = run_and_write(ctx, spec, "eta_sweep");
    const double secs = seconds_since(t0);
    const auto err = t.numbers("err_empirical"), pred = t.numbers("err_predicted");
    bool ok = spec.seeds.size() >= 10 && secs <= 1200.0;
    double worst = 0.0, prev = 1.0;
    std::string means;
    for (const auto& [eta, idx] : group_by(t, "eta")) {
        const double m = mean_of(err, idx);
        worst = std::max(worst, std::abs(m - pred[idx.front()]));
        ok = ok && m < prev;
        prev = m;
        means += (means.empty() ? "" : ", ") + fmt("%.4f", m);
    }
    ok = ok && worst <= 0.02;
    return {ok, "mean errors by eta " + means + "; max |mean - predicted| " + fmt("%.4f", worst) + ", " +
                    std::to_string(spec.seeds.size()) + " seeds, " + fmt("%.0f", secs) + " s"};
}

// 7. Low-dimensional ridge logistic regression.
Outcome lowdim(Context& ctx) {
    const ExperimentSpec spec = default_spec(ExperimentKind::LowdimLogistic);
    const ResultTable t = run_and_write(ctx, spec, "lowdim_logistic");
    const auto rule = t.texts("lambda_rule");
    const auto lam = t.numbers("lambda"), eta = t.numbers("eta"), err = t.numbers("err_empirical");
    std::map<double, std::vector<std::size_t>> flat, sqrt_n;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        if (rule[i] == "abs" && lam[i] == 1.0) flat[eta[i]].push_back(i);
        if (rule[i] == "sqrt_n") sqrt_n[eta[i]].push_back(i);
    }
    const double target = 0.158655;
    bool ok = spec.seeds.size() >= 20 && flat.size() == 3 && sqrt_n.size() == 3;
    double worst = 0.0;
    for (const auto& [e, idx] : flat) worst = std::max(worst, std::abs(mean_of(err, idx) - target));
    ok = ok && worst <= 0.01;
    double prev = 1.0;
    std::string seq;
    for (const auto& [e, idx] : sqrt_n) {
        const double m = mean_of(err, idx);
        ok = ok && m <= prev;
        prev = m;
        seq += (seq.empty() ? "" : ", ") + fmt("%.4f", m);
    }
    return {ok, "lambda=1: max |mean error - Phi(-1)| " + fmt("%.4f", worst) + "; lambda=0.5 sqrt(n): mean errors by eta " + seq};
}

// 8. Population fixed point of ridge logistic regression.
Outcome psi_fixed_point(Context&) {
    const Quadrature q = gauss_hermite(80);
    Rng rng(8);
    double worst0 = 0.0;
    for (int i = 0; i < 10; ++i)
        worst0 = std::max(worst0, std::abs(psi(0.0, 10.0 * rng.uniform(), 4.0 * rng.uniform() - 0.5, 0.1 + 3.0 * rng.uniform(), q) - 0.5));
    double worst_rel = 0.0;
    for (double eta : {0.0, 1.0}) {
        const double k = psi_root(1e6, eta, 1.0, q);
        worst_rel = std::max(worst_rel, std::abs(1e6 * k / ((1 + eta) * (1 + eta) / 4.0) - 1.0));
    }
    return {worst0 <= 1e-10 && worst_rel <= 0.01,
            "max |psi(0) - 0.5| " + fmt("%.1e", worst0) + ", max relative gap of lambda*kappa " + fmt("%.2e", worst_rel)};
}

// 9. Spiked augmentation: trained curve against theory.
Outcome inhomo_curve(Context& ctx) {
    const ExperimentSpec spec = default_spec(ExperimentKind::InhomoCurve);
    const ResultTable t = run_and_write(ctx, spec, "inhomo_curve");
    const auto tau = t.numbers("tau"), th = t.numbers("T_theory"), em = t.numbers("T_empirical"), t1 = t.numbers("tau1_star");
    double worst = 0.0;
    int used = 0;
    for (std::size_t i = 0; i < tau.size(); ++i) {
        if (std::abs(tau[i] - t1[i]) <= 0.2 * t1[i]) continue;
        ++used;
        worst = std::max(worst, std::abs(th[i] - em[i]));
    }
    double worst_r0 = 0.0;
    for (double s2 : {0.25, 0.5, 1.0, 2.0})
        for (double m : {1.0, 4.0, 16.0, 25.0})
            worst_r0 = std::max(worst_r0, std::abs(tau1_star(InhomoConfig{m, s2, 5.0, 0.0, 1.0}) - tau_star(s2, m)));
    double max_T = 0.0;
    for (double r : {0.1, 0.5, 0.9})
        for (double rho : {0.5, 5.0})
            for (double m : {4.0, 16.0})
                for (double s2 : {0.25, 1.0}) {
                    InhomoConfig c{m, s2, rho, r, 1.0};
                    const double base = tau1_star(c);
                    for (double tt : log_space(1e-2 * base, 1e2 * base, 41)) {
                        c.tau = tt;
                        max_T = std::max(max_T, solve_T_star(c).T_star);
                    }
                }
    const bool ok = t.flagged_cells == 0 && used > 0 && worst <= 0.1 && worst_r0 <= 1e-12 && max_T <= 1.0 - 1e-6;
    return {ok, "max |T_theory - T_empirical| off-band " + fmt("%.4f", worst) + " (" + std::to_string(used) +
                    " cells), max |tau1*(r=0) - tau*| " + fmt("%.1e", worst_r0) + ", max T* " + fmt("%.9f", max_T)};
}

// 10. Gap between the exact-loss minimizer and the approximate optimum.
Outcome approximation_gap(Context& ctx) {
    std::ofstream csv(ctx.out / "approximation_gap.csv", std::ios::binary);
    csv << "mu_norm,t_trained,t_star,gap,epochs,converged\n";
    const int p = 10;
    const double sigma = 1.0, tau = 5.0;
    bool ok = true;
    double prev_gap = INFINITY;
    std::string gaps;
    for (double m : {3.0, 5.0, 10.0}) {
        Vec mu = Vec::Zero(p);
        mu(0) = m;
        const GmmConfig cfg = make_homogeneous(mu, sigma);
        TrainConfig tc;
        tc.objective = Objective::PopulationClosedForm;
        // Run until no step decreases the loss in double precision: in expansion the infimum sits at
        // the rank-one limit (t = t* exactly), so the trained gap is the optimizer's resolution floor.
        tc.step_size = 64.0;
        tc.rel_tol = 0.0;
        tc.epochs = 5000;
        tc.seed = 10;
        const TrainTrace tr = train_projector(cfg, LossContext{cfg, tau}, tc);
        const PhaseReport rep = classify_regime({sigma * sigma, tau, m * m});
        const double t = tr.t_per_epoch.back(), gap = std::abs(t - rep.t_star);
        ok = ok && rep.regime == Regime::Expansion && t >= rep.t_star - 1e-6 && gap <= prev_gap;
        prev_gap = gap;
        gaps += (gaps.empty() ? "" : ", ") + fmt("%.3e", gap);
        csv << m << ',' << fmt("%.17g", t) << ',' << fmt("%.17g", rep.t_star) << ',' << fmt("%.17g", gap) << ','
            << tr.t_per_epoch.size() << ',' << (tr.converged ? 1 : 0) << '\n';
    }
    return {ok, "gaps for |mu| = 3, 5, 10: " + gaps};
}

// 11. Reruns every experiment (with a different worker count) and compares bytes.
Outcome determinism(Context& ctx) {
    const fs::path again = ctx.out / "rerun";
    int compared = 0, mismatched = 0;
    for (const ExperimentSpec& spec : ctx.runs) {
        const std::string stem = to_string(spec.kind);
        const ResultTable t = run_experiment(spec, RunOptions{ctx.jobs + 1});
        write_outputs(t, spec, (again / stem).string(), false);
        const fs::path a = ctx.out / stem / (stem + ".csv"), b = again / stem / (stem + ".csv");
        const fs::path ma = ctx.out / stem / (stem + ".meta.json"), mb = again / stem / (stem + ".meta.json");
        ++compared;
        if (read_file(a) != read_file(b) || without_timestamp(read_file(ma)) != without_timestamp(read_file(mb))) ++mismatched;
    }
    return {compared > 0 && mismatched == 0,
            std::to_string(compared) + " experiment tables rerun, " + std::to_string(mismatched) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance suite"};
    std::string out = "acceptance_out";
    int jobs = 1;
    app.add_option("--out", out, "Directory for the CSV tables");
    app.add_option("--jobs", jobs, "Worker threads for the grid runs")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    Context ctx;
    ctx.out = out;
    ctx.jobs = jobs;
    fs::create_directories(ctx.out);

    const std::vector<std::pair<std::string, std::function<Outcome(Context&)>>> criteria = {
        {"1 phase transition heatmap", phase_transition},
        {"2 threshold and shrinkage formulas", threshold_formulas},
        {"3 loss sandwich and Monte Carlo", sandwich_and_monte_carlo},
        {"4 SimCLR gradient check", gradient_check},
        {"5 asymptotic scalar system", cgmt_system},
        {"6 high-dimensional error prediction", eta_sweep},
        {"7 low-dimensional invariance", lowdim},
        {"8 logistic fixed point", psi_fixed_point},
        {"9 spiked augmentation curve", inhomo_curve},
        {"10 approximation gap scaling", approximation_gap},
        {"11 determinism", determinism},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn(ctx);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
