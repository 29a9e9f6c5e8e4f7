#include "projhead/asymptotics.hpp"

#include "projhead/errors.hpp"
#include "projhead/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace projhead {

namespace {

constexpr double kUMin = 1e-4;
constexpr double kUMax = 1e4;
constexpr int kUGrid = 2048;

// u* grows like sqrt(c) when the projector nearly removes the signal
// (eta -> -1), so the search range is stretched with c.
double u_upper(const AsymptoticProblem& prob) { return kUMax * std::max(1.0, std::sqrt(prob.c)); }

}  // namespace

AsymptoticProblem AsymptoticProblem::make(double delta, double rho, double eta) {
    AsymptoticProblem p{delta, rho, eta, 1.0 / ((1.0 + eta) * (1.0 + eta))};
    p.validate();
    return p;
}

void AsymptoticProblem::validate() const {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("AsymptoticProblem: delta must be positive");
    if (!(rho >= 0.0) || !std::isfinite(rho)) throw DomainError("AsymptoticProblem: rho must be >= 0");
    if (!(eta > -1.0)) throw DomainError("AsymptoticProblem: eta must exceed -1");
    if (std::abs(c * (1.0 + eta) * (1.0 + eta) - 1.0) > 1e-12)
        throw DomainError("AsymptoticProblem: c must equal (1+eta)^-2");
}

std::string to_string(SeparabilityRegime r) {
    return r == SeparabilityRegime::Separable ? "separable" : "non_separable";
}

double f_delta(double u, double kappa, const AsymptoticProblem& prob) {
    const double a = std::sqrt(1.0 + u * u);
    const double b = kappa * std::sqrt(u * u + prob.c) - std::sqrt(prob.rho);
    return -u * u + prob.delta * positive_part_moment2(a, b);
}

double f_delta_du(double u, double kappa, const AsymptoticProblem& prob) {
    // Z(u) = sqrt(1+u^2) G + kappa sqrt(u^2+c) - sqrt(rho).
    const double a = std::sqrt(1.0 + u * u);
    const double s = std::sqrt(u * u + prob.c);
    const double b = kappa * s - std::sqrt(prob.rho);
    const double p_pos = gaussian_cdf(b / a);
    const double e_pos = positive_part_moment1(a, b);
    return -2.0 * u + 2.0 * u * prob.delta * p_pos + 2.0 * prob.delta * kappa * u / s * e_pos;
}

double delta_star(double rho) {
    if (!(rho >= 0.0)) throw DomainError("delta_star: rho must be >= 0");
    const double m = std::sqrt(rho);
    auto ratio = [m](double u) { return positive_part_moment2(std::sqrt(1.0 + u * u), -m) / (u * u); };
    ScalarSearch search{kUGrid, true};
    const ScalarMin best = minimize_scalar(ratio, kUMin, kUMax, 1e-14, search);
    return 1.0 / best.value;
}

double kappa_tail(double delta) {
    if (!(delta > 0.0)) throw DomainError("kappa_tail: delta must be positive");
    auto g = [delta](double k) { return delta * positive_part_moment2(1.0, k) - 1.0; };
    double lo = -1.0, hi = 1.0;
    while (g(lo) > 0.0) lo *= 2.0;
    while (g(hi) < 0.0) hi *= 2.0;
    return bisect_root(g, lo, hi, 1e-14);
}

double inf_over_u(double kappa, const AsymptoticProblem& prob) {
    if (kappa <= kappa_tail(prob.delta)) return -std::numeric_limits<double>::infinity();
    auto f = [&](double u) { return f_delta(u, kappa, prob); };
    ScalarSearch search{kUGrid, true};
    const ScalarMin best = minimize_scalar(f, kUMin, u_upper(prob), 1e-14, search);
    return std::min(best.value, f(0.0));
}

double solve_kappa_star(const AsymptoticProblem& prob) {
    prob.validate();
    const double ds = delta_star(prob.rho);
    if (!(prob.delta < ds)) throw StateError("solve_kappa_star: non-separable regime (delta >= delta*)");
    const double lo = std::max(kappa_tail(prob.delta), 0.0);
    auto g = [&](double k) { return inf_over_u(k, prob); };
    double hi = std::max(1.0, 2.0 * lo);
    while (g(hi) <= 0.0) {
        hi *= 2.0;
        if (hi > 1e3) throw NumericalError("solve_kappa_star: no bracket below kappa = 1e3");
    }
    // g is increasing in kappa; g(lo) <= 0 either by the tail argument or
    // because kappa = 0 is feasible below delta*.
    auto g_signed = [&](double k) { return k <= lo ? -1.0 : g(k); };
    return bisect_root(g_signed, lo, hi, 1e-13);
}

double solve_u_star(const AsymptoticProblem& prob, double kappa_star) {
    // Pure noise: kappa* sits at the tail level, where inf_u f_delta jumps
    // from -infinity to a positive value, so no finite u attains f = 0; the
    // orientation ratio is unbounded and the error is exactly 1/2.
    if (prob.rho == 0.0) return std::numeric_limits<double>::infinity();
    auto f = [&](double u) { return f_delta(u, kappa_star, prob); };
    ScalarSearch search{kUGrid, true};
    const double hi = u_upper(prob);
    const ScalarMin best = minimize_scalar(f, kUMin, hi, 1e-12, search);
    if (best.argmin >= 0.5 * hi) throw NumericalError("solve_u_star: minimizer at the edge of the search range");
    return best.argmin;
}

double solve_u_star(const AsymptoticProblem& prob) {
    return solve_u_star(prob, solve_kappa_star(prob));
}

double predicted_test_error(const AsymptoticProblem& prob) {
    const double u = solve_u_star(prob);
    return gaussian_cdf(-std::sqrt(prob.rho) / std::sqrt(1.0 + u * u));
}

AsymptoticSolution solve_asymptotic(const AsymptoticProblem& prob) {
    prob.validate();
    AsymptoticSolution sol;
    sol.delta_star = delta_star(prob.rho);
    sol.near_threshold = std::abs(prob.delta - sol.delta_star) <= 0.01 * sol.delta_star;
    if (!(prob.delta < sol.delta_star)) {
        sol.regime = SeparabilityRegime::NonSeparable;
        return sol;
    }
    sol.regime = SeparabilityRegime::Separable;
    sol.kappa_star = solve_kappa_star(prob);
    sol.u_star = solve_u_star(prob, sol.kappa_star);
    sol.predicted_error = gaussian_cdf(-std::sqrt(prob.rho) / std::sqrt(1.0 + sol.u_star * sol.u_star));
    return sol;
}

}  // namespace projhead
