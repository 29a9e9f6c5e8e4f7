#include "projhead/harness.hpp"

#include "projhead/asymptotics.hpp"
#include "projhead/csv.hpp"
#include "projhead/downstream.hpp"
#include "projhead/errors.hpp"
#include "projhead/gmm.hpp"
#include "projhead/inhomo.hpp"
#include "projhead/phase.hpp"
#include "projhead/svg.hpp"
#include "projhead/trainer.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace projhead {

namespace {

using json = nlohmann::json;

struct KindInfo {
    ExperimentKind kind;
    const char* tag;       // snake_case tag
    const char* cli_name;  // kebab-case subcommand
};

const KindInfo kKinds[] = {
    {ExperimentKind::PhaseHeatmap, "phase_heatmap", "phase-heatmap"},
    {ExperimentKind::EtaSweep, "eta_sweep", "eta-sweep"},
    {ExperimentKind::CgmtTable, "cgmt_table", "cgmt-table"},
    {ExperimentKind::InhomoCurve, "inhomo_curve", "inhomo-curve"},
    {ExperimentKind::LowdimLogistic, "lowdim_logistic", "lowdim-logistic"},
    {ExperimentKind::ProjectorDiagnostics, "projector_diagnostics", "diagnose-features"},
};

// Parameters that must hold positive integers.
const std::set<std::string> kIntegerParams{"n", "p", "epochs", "batch_size"};

// Axis order used to enumerate cells (last axis varies fastest).
std::vector<std::string> axis_order(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::PhaseHeatmap:
            return {"n", "p", "mu_norm", "epochs", "batch_size", "step_size", "sigma_aug", "tau"};
        case ExperimentKind::EtaSweep: return {"n", "p", "rho", "eta"};
        case ExperimentKind::CgmtTable: return {"delta", "rho", "eta"};
        case ExperimentKind::InhomoCurve:
            return {"n", "p", "mu_norm", "rho_aug", "sigma_aug", "r", "epochs", "batch_size", "step_size", "tau"};
        case ExperimentKind::LowdimLogistic: return {"n", "p", "mu_norm", "eta", "lambda", "lambda_sqrt_n", "lambda_n"};
        case ExperimentKind::ProjectorDiagnostics: return {"epochs", "batch_size", "step_size", "sigma_aug", "tau"};
    }
    return {};
}

std::string hex64(std::uint64_t x) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[x & 0xf];
        x >>= 4;
    }
    return s;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

const std::vector<double>& axis(const ExperimentSpec& spec, const std::string& name) {
    const auto it = spec.grid.find(name);
    if (it == spec.grid.end()) throw ParseError("experiment spec: missing parameter '" + name + "'");
    return it->second;
}

// Cartesian product over the named axes (last varies fastest).
std::vector<std::vector<double>> product(const ExperimentSpec& spec, const std::vector<std::string>& names) {
    std::vector<std::vector<double>> out{{}};
    for (const auto& name : names) {
        std::vector<std::vector<double>> next;
        for (const auto& prefix : out) {
            for (double v : axis(spec, name)) {
                auto row = prefix;
                row.push_back(v);
                next.push_back(std::move(row));
            }
        }
        out = std::move(next);
    }
    return out;
}

// Per-cell seed from the base seed, kind tag and coordinates keyed by
// parameter name (sorted by name so the hash ignores enumeration order).
std::uint64_t cell_seed(std::uint64_t base, ExperimentKind kind, const std::vector<std::string>& names,
                        const std::vector<double>& values) {
    std::vector<std::pair<std::string, double>> kv;
    for (std::size_t i = 0; i < names.size(); ++i) kv.emplace_back(names[i], values[i]);
    std::sort(kv.begin(), kv.end());
    std::vector<std::uint64_t> coords;
    for (const auto& [k, v] : kv) {
        coords.push_back(fnv1a(k));
        coords.push_back(double_bits(v));
    }
    return derive_seed(base, to_string(kind), coords);
}

using Row = std::vector<Cell>;

// Runs `count` independent tasks on up to `jobs` threads and concatenates
// their rows in task order, so the result does not depend on scheduling.
std::vector<Row> run_tasks(std::size_t count, int jobs, const std::function<std::vector<Row>(std::size_t)>& task) {
    std::vector<std::vector<Row>> results(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                results[i] = task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<Row> rows;
    for (auto& r : results)
        for (auto& row : r) rows.push_back(std::move(row));
    return rows;
}

std::string seeds_text(const ExperimentSpec& spec) {
    std::string s;
    for (std::size_t i = 0; i < spec.seeds.size(); ++i) {
        if (i) s += ' ';
        s += std::to_string(spec.seeds[i]);
    }
    return s;
}

std::string now_iso8601() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ResultTable make_table(const ExperimentSpec& spec, std::vector<std::string> columns, std::vector<Row> rows) {
    ResultTable t;
    t.columns = std::move(columns);
    t.rows = std::move(rows);
    t.provenance.spec_hash = spec.hash();
    t.provenance.seeds = seeds_text(spec);
    t.provenance.timestamp = now_iso8601();
    if (std::find(t.columns.begin(), t.columns.end(), "flagged") != t.columns.end()) {
        const std::size_t k = t.column_index("flagged");
        for (const auto& r : t.rows)
            if (std::get<std::int64_t>(r[k]) != 0) ++t.flagged_cells;
    }
    return t;
}

std::int64_t as_int(double x) {
    return static_cast<std::int64_t>(std::llround(x));
}

double nan() {
    return std::numeric_limits<double>::quiet_NaN();
}

// "adam" (default) or "sgd"; anything else is rejected when the experiment spec is parsed.
Optimizer optimizer_of(const ExperimentSpec& spec) {
    const auto it = spec.options.find("optimizer");
    if (it == spec.options.end() || it->second == "adam") return Optimizer::Adam;
    if (it->second == "sgd") return Optimizer::Sgd;
    throw ParseError("experiment spec: option 'optimizer' must be 'adam' or 'sgd'");
}

// Trains a projector on the empirical loss and returns it.
Mat train_empirical(const GmmConfig& cfg, double tau, int n, int epochs, int batch, double step, Optimizer optimizer,
                    std::uint64_t seed) {
    const Dataset data = sample_dataset(cfg, n, derive_seed(seed, "data"));
    TrainConfig tc;
    tc.objective = Objective::EmpiricalSimclr;
    tc.optimizer = optimizer;
    tc.epochs = epochs;
    tc.batch_size = batch;
    tc.step_size = step;
    tc.seed = derive_seed(seed, "train");
    LossContext ctx{cfg, tau};
    return train_projector(cfg, ctx, tc, data).final_W;
}

}  // namespace

std::string to_string(ExperimentKind k) {
    for (const auto& info : kKinds)
        if (info.kind == k) return info.tag;
    return "unknown";
}

ExperimentKind experiment_kind_from(std::string_view name) {
    for (const auto& info : kKinds)
        if (name == info.tag || name == info.cli_name) return info.kind;
    if (name == "ProjectorDiagnostics" || name == "diagnose_features") return ExperimentKind::ProjectorDiagnostics;
    const std::pair<const char*, ExperimentKind> camel[] = {
        {"PhaseHeatmap", ExperimentKind::PhaseHeatmap}, {"EtaSweep", ExperimentKind::EtaSweep},
        {"CgmtTable", ExperimentKind::CgmtTable},       {"InhomoCurve", ExperimentKind::InhomoCurve},
        {"LowdimLogistic", ExperimentKind::LowdimLogistic}};
    for (const auto& [n, k] : camel)
        if (name == n) return k;
    throw ParseError("unknown experiment kind '" + std::string(name) + "'");
}

std::string ExperimentSpec::canonical() const {
    std::ostringstream os;
    os << "kind=" << to_string(kind) << ';';
    for (const auto& [name, values] : grid) {
        os << name << '=';
        for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << format_number(values[i]);
        os << ';';
    }
    os << "seeds=";
    for (std::size_t i = 0; i < seeds.size(); ++i) os << (i ? "," : "") << seeds[i];
    os << ';';
    for (const auto& [k, v] : options) os << "opt:" << k << '=' << v << ';';
    return os.str();
}

std::string ExperimentSpec::hash() const {
    return hex64(fnv1a(canonical()));
}

ExperimentSpec default_spec(ExperimentKind kind) {
    ExperimentSpec s;
    s.kind = kind;
    const std::vector<double> tau_grid = log_space(0.01, 10.0, 10);
    switch (kind) {
        case ExperimentKind::PhaseHeatmap:
            s.grid = {{"sigma_aug", {0.5, 1.0}}, {"tau", tau_grid}, {"n", {2000}}, {"p", {50}},
                      {"mu_norm", {5}},          {"epochs", {200}}, {"batch_size", {500}}, {"step_size", {0.005}}};
            s.seeds = {0};
            s.options = {{"optimizer", "adam"}};
            break;
        case ExperimentKind::EtaSweep:
            s.grid = {{"n", {1000}}, {"p", {2000}}, {"rho", {3}}, {"eta", {0, 1, 2, 4}}};
            s.seeds.clear();
            for (int i = 0; i < 10; ++i) s.seeds.push_back(static_cast<std::uint64_t>(i));
            break;
        case ExperimentKind::CgmtTable:
            s.grid = {{"delta", {0.25, 0.5, 1.0}}, {"rho", {0, 1, 3}}, {"eta", {0, 1, 2}}};
            s.seeds = {0};
            break;
        case ExperimentKind::InhomoCurve:
            s.grid = {{"tau", tau_grid}, {"rho_aug", {5}}, {"sigma_aug", {0.5}}, {"r", {0.5}}, {"p", {100}},
                      {"n", {2000}},     {"mu_norm", {4}}, {"epochs", {200}},   {"batch_size", {500}},
                      {"step_size", {0.005}}};
            s.seeds = {0};
            s.options = {{"optimizer", "adam"}};
            break;
        case ExperimentKind::LowdimLogistic:
            s.grid = {{"n", {20000}},   {"p", {10}},           {"mu_norm", {1}}, {"eta", {-0.5, 0, 2}},
                      {"lambda", {0, 1}}, {"lambda_sqrt_n", {0.5}}, {"lambda_n", {1}}};
            s.seeds.clear();
            for (int i = 0; i < 20; ++i) s.seeds.push_back(static_cast<std::uint64_t>(i));
            break;
        case ExperimentKind::ProjectorDiagnostics:
            s.grid = {{"tau", {1}}, {"sigma_aug", {1}}, {"epochs", {100}}, {"batch_size", {500}}, {"step_size", {0.005}}};
            s.seeds = {0};
            s.options = {{"label_column", "label"}, {"optimizer", "adam"}};
            break;
    }
    return s;
}

ExperimentSpec parse_experiment_spec(std::string_view json_text, std::optional<ExperimentKind> expected) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("experiment spec: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("experiment spec: top level must be an object");
    for (const auto& [key, _] : j.items())
        if (key != "kind" && key != "grid" && key != "seeds" && key != "seed" && key != "output_dir" && key != "options")
            throw ParseError("experiment spec: unknown field '" + key + "'");

    ExperimentKind kind;
    if (j.contains("kind")) {
        if (!j["kind"].is_string()) throw ParseError("experiment spec: 'kind' must be a string");
        kind = experiment_kind_from(j["kind"].get<std::string>());
        if (expected && kind != *expected)
            throw ParseError("experiment spec: kind '" + to_string(kind) + "' does not match the subcommand");
    } else if (expected) {
        kind = *expected;
    } else {
        throw ParseError("experiment spec: missing 'kind'");
    }
    ExperimentSpec spec = default_spec(kind);

    if (j.contains("grid")) {
        if (!j["grid"].is_object()) throw ParseError("experiment spec: 'grid' must be an object");
        for (const auto& [name, value] : j["grid"].items()) {
            if (!spec.grid.count(name))
                throw ParseError("experiment spec: parameter '" + name + "' is not valid for " + to_string(kind));
            std::vector<double> values;
            auto take = [&](const json& x) {
                if (!x.is_number()) throw ParseError("experiment spec: parameter '" + name + "' must be numeric");
                const double v = x.get<double>();
                if (!std::isfinite(v)) throw ParseError("experiment spec: parameter '" + name + "' must be finite");
                if (kIntegerParams.count(name) && (v < 1 || v != std::floor(v)))
                    throw ParseError("experiment spec: parameter '" + name + "' must be a positive integer");
                values.push_back(v);
            };
            if (value.is_array()) {
                for (const auto& x : value) take(x);
            } else {
                take(value);
            }
            // Lists may be empty only for the optional lambda families.
            if (values.empty() && name.rfind("lambda", 0) != 0)
                throw ParseError("experiment spec: parameter '" + name + "' has no values");
            spec.grid[name] = values;
        }
    }
    if (j.contains("seeds") && j.contains("seed")) throw ParseError("experiment spec: give either 'seed' or 'seeds'");
    if (j.contains("seeds")) {
        if (!j["seeds"].is_array() || j["seeds"].empty()) throw ParseError("experiment spec: 'seeds' must be a non-empty array");
        spec.seeds.clear();
        for (const auto& s : j["seeds"]) {
            if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
                throw ParseError("experiment spec: seeds must be nonnegative integers");
            spec.seeds.push_back(s.get<std::uint64_t>());
        }
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer() || j["seed"].get<long long>() < 0)
            throw ParseError("experiment spec: 'seed' must be a nonnegative integer");
        spec.seeds = {j["seed"].get<std::uint64_t>()};
    }
    if (j.contains("output_dir")) {
        if (!j["output_dir"].is_string()) throw ParseError("experiment spec: 'output_dir' must be a string");
        spec.output_dir = j["output_dir"].get<std::string>();
    }
    if (j.contains("options")) {
        if (!j["options"].is_object()) throw ParseError("experiment spec: 'options' must be an object");
        for (const auto& [k, v] : j["options"].items()) {
            if (!v.is_string()) throw ParseError("experiment spec: option '" + k + "' must be a string");
            spec.options[k] = v.get<std::string>();
            if (k == "optimizer") optimizer_of(spec);
        }
    }
    return spec;
}

ExperimentSpec load_experiment_spec(const std::string& path, std::optional<ExperimentKind> expected) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open experiment spec '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment_spec(ss.str(), expected);
}

std::size_t ResultTable::column_index(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw DomainError("ResultTable: no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> ResultTable::numbers(const std::string& column) const {
    const std::size_t k = column_index(column);
    std::vector<double> out;
    for (const auto& r : rows) {
        if (const auto* d = std::get_if<double>(&r[k])) out.push_back(*d);
        else if (const auto* i = std::get_if<std::int64_t>(&r[k])) out.push_back(static_cast<double>(*i));
        else throw DomainError("ResultTable: column '" + column + "' is not numeric");
    }
    return out;
}

std::vector<std::string> ResultTable::texts(const std::string& column) const {
    const std::size_t k = column_index(column);
    std::vector<std::string> out;
    for (const auto& r : rows) {
        if (const auto* s = std::get_if<std::string>(&r[k])) out.push_back(*s);
        else if (const auto* d = std::get_if<double>(&r[k])) out.push_back(format_number(*d));
        else out.push_back(std::to_string(std::get<std::int64_t>(r[k])));
    }
    return out;
}

void ResultTable::write_csv(std::ostream& os) const {
    write_csv_row(os, columns);
    for (const auto& r : rows) {
        std::vector<std::string> fields;
        fields.reserve(r.size());
        for (const auto& c : r) {
            if (const auto* d = std::get_if<double>(&c)) fields.push_back(format_number(*d));
            else if (const auto* i = std::get_if<std::int64_t>(&c)) fields.push_back(std::to_string(*i));
            else fields.push_back(std::get<std::string>(c));
        }
        write_csv_row(os, fields);
    }
}

std::string ResultTable::to_csv() const {
    std::ostringstream os;
    write_csv(os);
    return os.str();
}

ResultTable run_phase_heatmap(const ExperimentSpec& spec, const RunOptions& opt) {
    const auto names = axis_order(ExperimentKind::PhaseHeatmap);
    const auto cells = product(spec, names);
    const std::size_t per_seed = cells.size();
    auto task = [&](std::size_t idx) -> std::vector<Row> {
        const std::uint64_t seed = spec.seeds[idx / per_seed];
        const auto& v = cells[idx % per_seed];
        const int n = static_cast<int>(v[0]), p = static_cast<int>(v[1]);
        const double mu_norm = v[2];
        const int epochs = static_cast<int>(v[3]), batch = static_cast<int>(v[4]);
        const double step = v[5], sigma = v[6], tau = v[7];
        const std::uint64_t cs = cell_seed(seed, ExperimentKind::PhaseHeatmap, names, v);
        Vec mu = Vec::Zero(p);
        mu(0) = mu_norm;
        const PhaseReport rep = classify_regime({sigma * sigma, tau, mu_norm * mu_norm});
        double T = nan(), t = nan();
        std::int64_t flagged = 0;
        try {
            const GmmConfig cfg = make_homogeneous(mu, sigma);
            const Mat W = train_empirical(cfg, tau, n, epochs, batch, step, optimizer_of(spec), cs);
            T = expansion_measure(W, mu);
            t = t_of(W, mu, sigma * sigma);
        } catch (const NumericalError&) {
            flagged = 1;
        } catch (const TrainingDivergedError&) {
            flagged = 1;
        } catch (const DegenerateEmbeddingError&) {
            flagged = 1;
        }
        return {Row{static_cast<std::int64_t>(seed), std::to_string(cs), as_int(n), as_int(p), mu_norm, sigma, tau, T, t,
                    to_string(rep.regime), rep.tau_star, flagged}};
    };
    auto rows = run_tasks(spec.seeds.size() * per_seed, opt.jobs, task);
    return make_table(spec,
                      {"seed", "cell_seed", "n", "p", "mu_norm", "sigma_aug", "tau", "T_empirical", "t_empirical",
                       "regime_theory", "tau_star", "flagged"},
                      std::move(rows));
}

ResultTable run_eta_sweep(const ExperimentSpec& spec, const RunOptions& opt) {
    // The dataset is shared across eta (same seed, n, p, rho) so that the eta
    // comparison is paired; the cell seed therefore omits eta.
    const std::vector<std::string> data_axes{"n", "p", "rho"};
    const auto cells = product(spec, data_axes);
    const auto& etas = axis(spec, "eta");
    for (double e : etas)
        if (!(e > -1.0)) throw ParseError("eta_sweep: eta must exceed -1");

    // Asymptotic predictions per (delta, rho, eta), computed once.
    std::map<std::tuple<double, double, double>, AsymptoticSolution> theory;
    for (const auto& v : cells)
        for (double eta : etas) {
            const double delta = v[0] / v[1];
            auto key = std::make_tuple(delta, v[2], eta);
            if (!theory.count(key)) theory[key] = solve_asymptotic(AsymptoticProblem::make(delta, v[2], eta));
        }

    const std::size_t per_seed = cells.size();
    auto task = [&](std::size_t idx) -> std::vector<Row> {
        const std::uint64_t seed = spec.seeds[idx / per_seed];
        const auto& v = cells[idx % per_seed];
        const int n = static_cast<int>(v[0]), p = static_cast<int>(v[1]);
        const double rho = v[2];
        const std::uint64_t cs = cell_seed(seed, ExperimentKind::EtaSweep, data_axes, v);
        Vec mu = Vec::Zero(p);
        mu(0) = std::sqrt(rho);
        const Dataset data = sample_dataset(make_homogeneous(mu, 0.0), n, cs);
        std::vector<Row> rows;
        for (double eta : etas) {
            const AsymptoticSolution& sol = theory.at(std::make_tuple(static_cast<double>(n) / p, rho, eta));
            const EtaProjector proj = EtaProjector::make(eta, mu);
            const OmegaMarginFit fit = max_margin_omega(data.features, data.labels, proj);
            double err = 0.5, u = nan(), ub = nan(), kappa = 0.0;
            if (fit.z_fit.separable) {
                err = gmm_test_error(fit.z_fit.beta_hat, 0.0, mu, proj);
                u = fit.z_fit.u_hat;
                ub = fit.z_fit.u_hat_beta;
                kappa = fit.z_fit.margin;
            }
            rows.push_back(Row{static_cast<std::int64_t>(seed), std::to_string(cs), as_int(n), as_int(p), rho, eta,
                               static_cast<std::int64_t>(fit.z_fit.separable), err, u, ub, kappa, sol.predicted_error,
                               sol.kappa_star, sol.u_star, sol.delta_star});
        }
        return rows;
    };
    auto rows = run_tasks(spec.seeds.size() * per_seed, opt.jobs, task);
    return make_table(spec,
                      {"seed", "cell_seed", "n", "p", "rho", "eta", "separable", "err_empirical", "u_hat", "u_hat_beta",
                       "kappa_hat", "err_predicted", "kappa_star", "u_star", "delta_star"},
                      std::move(rows));
}

ResultTable run_cgmt_table(const ExperimentSpec& spec, const RunOptions& opt) {
    const auto names = axis_order(ExperimentKind::CgmtTable);
    const auto cells = product(spec, names);
    auto task = [&](std::size_t idx) -> std::vector<Row> {
        const auto& v = cells[idx];
        const AsymptoticProblem prob = AsymptoticProblem::make(v[0], v[1], v[2]);
        std::int64_t flagged = 0;
        AsymptoticSolution sol;
        try {
            sol = solve_asymptotic(prob);
            if (sol.near_threshold) flagged = 1;
        } catch (const NumericalError&) {
            flagged = 1;
            sol.delta_star = delta_star(prob.rho);
        }
        const bool sep = sol.regime == SeparabilityRegime::Separable;
        return {Row{v[0], v[1], v[2], prob.c, sol.delta_star, sep ? sol.kappa_star : nan(), sep ? sol.u_star : nan(),
                    sol.predicted_error, to_string(sol.regime), flagged}};
    };
    auto rows = run_tasks(cells.size(), opt.jobs, task);
    return make_table(spec,
                      {"delta", "rho", "eta", "c", "delta_star", "kappa_star", "u_star", "predicted_error", "regime",
                       "flagged"},
                      std::move(rows));
}

ResultTable run_inhomo_curve(const ExperimentSpec& spec, const RunOptions& opt) {
    const auto names = axis_order(ExperimentKind::InhomoCurve);
    const auto cells = product(spec, names);
    const std::size_t per_seed = cells.size();
    auto task = [&](std::size_t idx) -> std::vector<Row> {
        const std::uint64_t seed = spec.seeds[idx / per_seed];
        const auto& v = cells[idx % per_seed];
        const int n = static_cast<int>(v[0]), p = static_cast<int>(v[1]);
        const double mu_norm = v[2], rho_aug = v[3], sigma = v[4], r = v[5];
        const int epochs = static_cast<int>(v[6]), batch = static_cast<int>(v[7]);
        const double step = v[8], tau = v[9];
        if (std::abs(r) > 1.0) throw ParseError("inhomo_curve: cosine r must lie in [-1, 1]");
        const std::uint64_t cs = cell_seed(seed, ExperimentKind::InhomoCurve, names, v);
        Vec mu = Vec::Zero(p);
        mu(0) = mu_norm;
        Vec v_aug = Vec::Zero(p);
        v_aug(0) = r;
        v_aug(1) = std::sqrt(std::max(0.0, 1.0 - r * r));
        const GmmConfig cfg = make_spiked(mu, sigma, rho_aug, v_aug);
        const InhomoSolution sol = solve_T_star(inhomo_config_from(cfg, tau));
        double T = nan();
        std::int64_t flagged = 0;
        try {
            const Mat W = train_empirical(cfg, tau, n, epochs, batch, step, optimizer_of(spec), cs);
            T = expansion_measure(W, mu);
        } catch (const NumericalError&) {
            flagged = 1;
        } catch (const TrainingDivergedError&) {
            flagged = 1;
        } catch (const DegenerateEmbeddingError&) {
            flagged = 1;
        }
        return {Row{static_cast<std::int64_t>(seed), std::to_string(cs), as_int(n), as_int(p), mu_norm, rho_aug, sigma, r,
                    tau, sol.T_star, T, sol.tau1_star, to_string(sol.regime), flagged}};
    };
    auto rows = run_tasks(spec.seeds.size() * per_seed, opt.jobs, task);
    return make_table(spec,
                      {"seed", "cell_seed", "n", "p", "mu_norm", "rho_aug", "sigma_aug", "r", "tau", "T_theory",
                       "T_empirical", "tau1_star", "phase", "flagged"},
                      std::move(rows));
}

ResultTable run_lowdim_logistic(const ExperimentSpec& spec, const RunOptions& opt) {
    // One dataset per (seed, n, p, mu_norm); every eta and lambda is fitted on it.
    const std::vector<std::string> data_axes{"n", "p", "mu_norm"};
    const auto cells = product(spec, data_axes);
    const auto& etas = axis(spec, "eta");
    for (double e : etas)
        if (!(e > -1.0)) throw ParseError("lowdim_logistic: eta must exceed -1");
    const Quadrature quad = gauss_hermite(80);
    const std::size_t per_seed = cells.size();
    auto task = [&](std::size_t idx) -> std::vector<Row> {
        const std::uint64_t seed = spec.seeds[idx / per_seed];
        const auto& v = cells[idx % per_seed];
        const int n = static_cast<int>(v[0]), p = static_cast<int>(v[1]);
        const double mu_norm = v[2];
        const std::uint64_t cs = cell_seed(seed, ExperimentKind::LowdimLogistic, data_axes, v);
        Vec mu = Vec::Zero(p);
        mu(0) = mu_norm;
        const Dataset data = sample_dataset(make_homogeneous(mu, 0.0), n, cs);
        std::vector<std::pair<std::string, double>> lambdas;
        for (double l : axis(spec, "lambda")) lambdas.emplace_back("abs", l);
        for (double a : axis(spec, "lambda_sqrt_n")) lambdas.emplace_back("sqrt_n", a * std::sqrt(static_cast<double>(n)));
        for (double a : axis(spec, "lambda_n")) lambdas.emplace_back("n", a * n);
        std::vector<Row> rows;
        for (double eta : etas) {
            const EtaProjector proj = EtaProjector::make(eta, mu);
            const Mat Z = apply_eta(proj, data.features);
            for (const auto& [rule, lambda] : lambdas) {
                const RidgeLogisticFit fit = ridge_logistic_fit(Z, data.labels, lambda);
                double err = 0.5;
                if (fit.beta_hat.norm() > 0.0) err = gmm_test_error(fit.beta_hat, fit.gamma_hat, mu, proj);
                const double kappa = psi_root(lambda, eta, mu_norm, quad);
                const double resid = psi(kappa, lambda, eta, mu_norm, quad);
                rows.push_back(Row{static_cast<std::int64_t>(seed), std::to_string(cs), as_int(n), as_int(p), mu_norm, eta,
                                   rule, lambda, err, lowdim_asymptotic_error(mu_norm), kappa, resid, fit.gamma_hat,
                                   static_cast<std::int64_t>(fit.converged)});
            }
        }
        return rows;
    };
    auto rows = run_tasks(spec.seeds.size() * per_seed, opt.jobs, task);
    return make_table(spec,
                      {"seed", "cell_seed", "n", "p", "mu_norm", "eta", "lambda_rule", "lambda", "err_empirical",
                       "err_theory", "kappa_psi", "psi_residual", "gamma_hat", "converged"},
                      std::move(rows));
}

ResultTable run_projector_diagnostics(const ExperimentSpec& spec, const RunOptions& opt) {
    const auto it = spec.options.find("features");
    if (it == spec.options.end() || it->second.empty())
        throw ParseError("projector_diagnostics: option 'features' (CSV path) is required");
    const std::string label = spec.options.count("label_column") ? spec.options.at("label_column") : "label";
    const FeatureTable ft = ingest_features(it->second, label);
    const Eigen::Index p = ft.features.cols();
    if (p < 2) throw ParseError("projector_diagnostics: need at least two feature columns");

    // Signal direction: half the difference of the class means; features are
    // centered at the midpoint of the two class means.
    Vec mean_pos = Vec::Zero(p), mean_neg = Vec::Zero(p);
    double n_pos = 0, n_neg = 0;
    for (Eigen::Index i = 0; i < ft.features.rows(); ++i) {
        if (ft.labels(i) > 0) {
            mean_pos += ft.features.row(i).transpose();
            ++n_pos;
        } else {
            mean_neg += ft.features.row(i).transpose();
            ++n_neg;
        }
    }
    mean_pos /= n_pos;
    mean_neg /= n_neg;
    const Vec mu_hat = 0.5 * (mean_pos - mean_neg);
    const Vec center = 0.5 * (mean_pos + mean_neg);
    Dataset data{ft.features.rowwise() - center.transpose(), ft.labels};

    const auto names = axis_order(ExperimentKind::ProjectorDiagnostics);
    const auto cells = product(spec, names);
    const std::size_t per_seed = cells.size();
    auto task = [&](std::size_t idx) -> std::vector<Row> {
        const std::uint64_t seed = spec.seeds[idx / per_seed];
        const auto& v = cells[idx % per_seed];
        const std::uint64_t cs = cell_seed(seed, ExperimentKind::ProjectorDiagnostics, names, v);
        const double sigma = v[3], tau = v[4];
        GmmConfig cfg{static_cast<int>(p), mu_hat, sigma, std::nullopt};
        TrainConfig tc;
        tc.objective = Objective::EmpiricalSimclr;
        tc.epochs = static_cast<int>(v[0]);
        tc.batch_size = static_cast<int>(v[1]);
        tc.step_size = v[2];
        tc.optimizer = optimizer_of(spec);
        tc.seed = cs;
        const TrainTrace tr = train_projector(cfg, LossContext{cfg, tau}, tc, data);
        const SpectralReport rep = spectral_report(tr.final_projector(), mu_hat);
        std::vector<Row> rows;
        for (std::size_t j = 0; j < rep.singular_values.size(); ++j)
            rows.push_back(Row{static_cast<std::int64_t>(seed), std::to_string(cs), tau, sigma,
                               static_cast<std::int64_t>(j + 1), rep.singular_values[j], rep.mu_scores[j], rep.expansion});
        return rows;
    };
    auto rows = run_tasks(spec.seeds.size() * per_seed, opt.jobs, task);
    return make_table(spec, {"seed", "cell_seed", "tau", "sigma_aug", "index", "singular_value", "mu_score", "T"},
                      std::move(rows));
}

ResultTable run_experiment(const ExperimentSpec& spec, const RunOptions& opt) {
    switch (spec.kind) {
        case ExperimentKind::PhaseHeatmap: return run_phase_heatmap(spec, opt);
        case ExperimentKind::EtaSweep: return run_eta_sweep(spec, opt);
        case ExperimentKind::CgmtTable: return run_cgmt_table(spec, opt);
        case ExperimentKind::InhomoCurve: return run_inhomo_curve(spec, opt);
        case ExperimentKind::LowdimLogistic: return run_lowdim_logistic(spec, opt);
        case ExperimentKind::ProjectorDiagnostics: return run_projector_diagnostics(spec, opt);
    }
    throw ParseError("run_experiment: unknown kind");
}

namespace {

// Mean of `value` grouped by (group key, x), in first-seen order.
std::vector<Series> grouped_means(const ResultTable& t, const std::vector<std::string>& group_cols, const std::string& x_col,
                                  const std::string& y_col, const std::string& label_prefix, bool dashed = false) {
    std::vector<std::string> keys;
    std::map<std::string, std::vector<std::pair<double, std::pair<double, int>>>> acc;
    const auto xs = t.numbers(x_col);
    const auto ys = t.numbers(y_col);
    std::vector<std::vector<std::string>> gvals;
    for (const auto& g : group_cols) gvals.push_back(t.texts(g));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::string key = label_prefix;
        for (std::size_t g = 0; g < group_cols.size(); ++g) key += " " + group_cols[g] + "=" + gvals[g][i];
        if (!acc.count(key)) keys.push_back(key);
        auto& v = acc[key];
        auto it = std::find_if(v.begin(), v.end(), [&](const auto& e) { return e.first == xs[i]; });
        if (it == v.end()) {
            v.push_back({xs[i], {0.0, 0}});
            it = v.end() - 1;
        }
        if (std::isfinite(ys[i])) {
            it->second.first += ys[i];
            it->second.second += 1;
        }
    }
    std::vector<Series> out;
    for (const auto& key : keys) {
        Series s{key, {}, {}, dashed};
        for (const auto& [x, sc] : acc[key]) {
            s.xs.push_back(x);
            s.ys.push_back(sc.second ? sc.first / sc.second : nan());
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string render_table(const ResultTable& t, ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::PhaseHeatmap: {
            const auto taus = t.numbers("tau");
            const auto sig = t.numbers("sigma_aug");
            const auto T = t.numbers("T_empirical");
            std::vector<double> tu, su;
            for (double x : taus)
                if (std::find(tu.begin(), tu.end(), x) == tu.end()) tu.push_back(x);
            for (double x : sig)
                if (std::find(su.begin(), su.end(), x) == su.end()) su.push_back(x);
            std::sort(tu.begin(), tu.end());
            std::sort(su.begin(), su.end());
            std::vector<std::vector<double>> sum(su.size(), std::vector<double>(tu.size(), 0.0)), cnt = sum;
            for (std::size_t i = 0; i < taus.size(); ++i) {
                if (!std::isfinite(T[i])) continue;
                const auto c = std::find(tu.begin(), tu.end(), taus[i]) - tu.begin();
                const auto r = std::find(su.begin(), su.end(), sig[i]) - su.begin();
                sum[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] += T[i];
                cnt[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] += 1;
            }
            for (std::size_t r = 0; r < su.size(); ++r)
                for (std::size_t c = 0; c < tu.size(); ++c) sum[r][c] = cnt[r][c] ? sum[r][c] / cnt[r][c] : nan();
            std::vector<std::string> cl, rl;
            for (double x : tu) cl.push_back(format_number(std::round(x * 1000) / 1000));
            for (double x : su) rl.push_back(format_number(x));
            return render_heatmap("Expansion measure T (columns: tau, rows: sigma_aug)", cl, rl, sum, 0.0, 1.0);
        }
        case ExperimentKind::EtaSweep: {
            auto s = grouped_means(t, {"p", "rho"}, "eta", "err_empirical", "empirical");
            auto th = grouped_means(t, {"p", "rho"}, "eta", "err_predicted", "predicted", true);
            s.insert(s.end(), th.begin(), th.end());
            return render_line_chart("Max-margin test error vs eta", "eta", "test error", s);
        }
        case ExperimentKind::CgmtTable:
            return render_line_chart("Predicted test error vs eta", "eta", "predicted error",
                                     grouped_means(t, {"delta", "rho"}, "eta", "predicted_error", ""));
        case ExperimentKind::InhomoCurve: {
            auto s = grouped_means(t, {}, "tau", "T_empirical", "empirical");
            auto th = grouped_means(t, {}, "tau", "T_theory", "theory", true);
            s.insert(s.end(), th.begin(), th.end());
            return render_line_chart("Expansion measure T vs tau", "tau", "T", s, true);
        }
        case ExperimentKind::LowdimLogistic: {
            auto s = grouped_means(t, {"lambda_rule", "lambda"}, "eta", "err_empirical", "");
            return render_line_chart("Ridge logistic test error vs eta", "eta", "test error", s);
        }
        case ExperimentKind::ProjectorDiagnostics:
            return render_line_chart("Singular values of the trained projector", "index", "singular value",
                                     grouped_means(t, {"tau", "sigma_aug"}, "index", "singular_value", ""));
    }
    return {};
}

}  // namespace

std::string write_outputs(const ResultTable& table, const ExperimentSpec& spec, const std::string& dir, bool plot) {
    std::filesystem::create_directories(dir);
    const std::string stem = (std::filesystem::path(dir) / to_string(spec.kind)).string();
    {
        std::ofstream os(stem + ".csv", std::ios::binary);
        if (!os) throw ParseError("cannot write '" + stem + ".csv'");
        table.write_csv(os);
    }
    {
        json meta;
        meta["spec_hash"] = table.provenance.spec_hash;
        meta["seeds"] = spec.seeds;
        meta["version"] = table.provenance.version;
        meta["timestamp"] = table.provenance.timestamp;
        meta["kind"] = to_string(spec.kind);
        meta["spec"] = spec.canonical();
        meta["columns"] = table.columns;
        meta["rows"] = table.rows.size();
        meta["flagged_cells"] = table.flagged_cells;
        std::ofstream os(stem + ".meta.json", std::ios::binary);
        os << meta.dump(2) << '\n';
    }
    if (plot) {
        std::ofstream os(stem + ".svg", std::ios::binary);
        os << render_table(table, spec.kind);
    }
    return stem + ".csv";
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

FeatureTable ingest_features(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw ParseError("ingest_features: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("ingest_features: empty file (line 1)");
    const auto header = split_csv_line(line);
    std::size_t label_idx = header.size();
    for (std::size_t k = 0; k < header.size(); ++k)
        if (trim(header[k]) == label_column) label_idx = k;
    if (label_idx == header.size()) throw ParseError("ingest_features: missing label column '" + label_column + "' (line 1)");

    FeatureTable ft;
    for (std::size_t k = 0; k < header.size(); ++k)
        if (k != label_idx) ft.feature_names.push_back(trim(header[k]));
    const std::size_t p = ft.feature_names.size();

    std::vector<std::vector<double>> rows;
    std::vector<std::string> raw_labels;
    std::vector<std::size_t> bad_rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw ParseError("ingest_features: ragged row at line " + std::to_string(line_no) + " (expected " +
                             std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()) + ")");
        std::vector<double> row;
        row.reserve(p);
        bool finite = true;
        for (std::size_t k = 0; k < fields.size(); ++k) {
            if (k == label_idx) continue;
            double x;
            if (!parse_number(fields[k], x)) {
                const std::string f = trim(fields[k]);
                std::string lower;
                for (char c : f) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                if (lower == "nan" || lower == "inf" || lower == "-inf" || lower == "+inf" || lower == "infinity" ||
                    lower == "-infinity") {
                    finite = false;
                    x = 0.0;
                } else {
                    throw ParseError("ingest_features: non-numeric value '" + f + "' at line " + std::to_string(line_no));
                }
            } else if (!std::isfinite(x)) {
                finite = false;
            }
            row.push_back(x);
        }
        if (!finite) bad_rows.push_back(rows.size() + 1);
        rows.push_back(std::move(row));
        raw_labels.push_back(trim(fields[label_idx]));
    }
    if (!bad_rows.empty()) {
        std::string list;
        for (std::size_t i = 0; i < bad_rows.size(); ++i) list += (i ? ", " : "") + std::to_string(bad_rows[i]);
        throw ParseError("ingest_features: non-finite entries in data row(s) " + list +
                         " (row 1 is the line after the header)");
    }
    if (rows.empty()) throw ParseError("ingest_features: no data rows");

    std::vector<std::string> distinct;
    for (const auto& l : raw_labels)
        if (std::find(distinct.begin(), distinct.end(), l) == distinct.end()) distinct.push_back(l);
    if (distinct.size() < 2) throw ParseError("ingest_features: label column has fewer than 2 distinct values");
    if (distinct.size() > 2) throw ParseError("ingest_features: label column has more than 2 distinct values");
    double a, b;
    const bool numeric = parse_number(distinct[0], a) && parse_number(distinct[1], b);
    const bool first_is_neg = numeric ? a < b : distinct[0] < distinct[1];
    ft.negative_label = first_is_neg ? distinct[0] : distinct[1];
    ft.positive_label = first_is_neg ? distinct[1] : distinct[0];

    ft.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
    ft.labels.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t k = 0; k < p; ++k) ft.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        ft.labels(static_cast<Eigen::Index>(i)) = raw_labels[i] == ft.positive_label ? 1.0 : -1.0;
    }
    return ft;
}

void write_features_csv(const std::string& path, const Mat& features, const Vec& labels, const std::string& label_column) {
    if (labels.size() != features.rows()) throw ShapeError("write_features_csv: label count mismatch");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("write_features_csv: cannot write '" + path + "'");
    std::vector<std::string> head;
    for (Eigen::Index k = 0; k < features.cols(); ++k) head.push_back("x" + std::to_string(k + 1));
    head.push_back(label_column);
    write_csv_row(os, head);
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
        std::vector<std::string> row;
        for (Eigen::Index k = 0; k < features.cols(); ++k) row.push_back(format_number(features(i, k)));
        row.push_back(labels(i) > 0 ? "1" : "-1");
        write_csv_row(os, row);
    }
}

}  // namespace projhead
