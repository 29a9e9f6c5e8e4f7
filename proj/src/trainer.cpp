#include "projhead/trainer.hpp"

#include "projhead/csv.hpp"
#include "projhead/errors.hpp"
#include "projhead/phase.hpp"

#include <cmath>
#include <numeric>

namespace projhead {

void TrainConfig::validate() const {
    if (!(step_size > 0.0) || !std::isfinite(step_size)) throw DomainError("TrainConfig: step size must be positive");
    if (epochs < 1) throw DomainError("TrainConfig: need at least one epoch");
    if (objective == Objective::EmpiricalSimclr && batch_size < 2)
        throw DomainError("TrainConfig: batch size must be at least 2");
    if (patience < 1) throw DomainError("TrainConfig: patience must be positive");
}

Mat init_orthogonal(int p, std::uint64_t seed) {
    if (p < 2) throw DomainError("init_orthogonal: dimension must be at least 2");
    Rng rng(seed);
    const Mat G = rng.normal_matrix(p, p);
    Eigen::HouseholderQR<Mat> qr(G);
    Mat Q = qr.householderQ() * Mat::Identity(p, p);
    const Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < p; ++j)
        if (R(j, j) < 0.0) Q.col(j) *= -1.0;
    return Q;
}

Mat finite_difference_gradient(const std::function<double(const Mat&)>& f, const Mat& W, double h) {
    Mat g(W.rows(), W.cols());
    Mat X = W;
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
        for (Eigen::Index i = 0; i < W.rows(); ++i) {
            const double w = X(i, j);
            X(i, j) = w + h;
            const double fp = f(X);
            X(i, j) = w - h;
            const double fm = f(X);
            X(i, j) = w;
            g(i, j) = (fp - fm) / (2.0 * h);
        }
    }
    return g;
}

namespace {

Mat initial_matrix(const TrainConfig& tc, int p) {
    switch (tc.init) {
        case InitKind::Orthogonal: return init_orthogonal(p, derive_seed(tc.seed, "init"));
        case InitKind::Identity: return Mat::Identity(p, p);
        case InitKind::Given:
            if (tc.given.rows() != p || tc.given.cols() != p) throw ShapeError("train_projector: given init has wrong shape");
            return tc.given;
    }
    return Mat::Identity(p, p);
}

// Every loss here is invariant to W -> cW, so the iterate is kept at
// Frobenius norm sqrt(p) to keep step sizes meaningful.
void renormalize(Mat& W) {
    const double n = W.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("train_projector: projector collapsed");
    W *= std::sqrt(static_cast<double>(W.cols())) / n;
}

void record(TrainTrace& tr, const Mat& W, const GmmConfig& cfg, double loss) {
    tr.loss_per_epoch.push_back(loss);
    tr.t_per_epoch.push_back(t_of(W, cfg.mu, cfg.sigma_aug_sq()));
    tr.T_per_epoch.push_back(cfg.mu.norm() > 0.0 ? expansion_measure(W, cfg.mu) : 0.0);
}

TrainTrace train_stochastic(const GmmConfig& cfg, const LossContext& ctx, const TrainConfig& tc, const Dataset& data) {
    const Eigen::Index n = data.size();
    if (n < 2) throw DomainError("train_projector: need at least two samples");
    if (data.features.cols() != cfg.p) throw ShapeError("train_projector: dataset dimension mismatch");
    TrainTrace tr;
    Mat W = initial_matrix(tc, cfg.p);
    renormalize(W);
    const Eigen::Index bs = std::min<Eigen::Index>(tc.batch_size, n);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    Mat G;
    const bool adam = tc.optimizer == Optimizer::Adam;
    Mat m1, m2;
    if (adam) {
        m1 = Mat::Zero(cfg.p, cfg.p);
        m2 = Mat::Zero(cfg.p, cfg.p);
    }
    long long t_adam = 0;
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        Rng rng(derive_seed(tc.seed, "epoch", {static_cast<std::uint64_t>(epoch)}));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        for (Eigen::Index i = n - 1; i > 0; --i)
            std::swap(order[static_cast<std::size_t>(i)], order[rng.below(static_cast<std::size_t>(i + 1))]);
        const double schedule = tc.decay_step ? 1.0 - static_cast<double>(epoch) / tc.epochs : 1.0;
        const double step = tc.step_size * (adam ? 1.0 : ctx.tau) * schedule;
        double loss_sum = 0.0;
        int batches = 0;
        for (Eigen::Index start = 0; start + 1 < n; start += bs) {
            const Eigen::Index b = std::min(bs, n - start);
            if (b < 2) break;
            Mat H(b, cfg.p);
            for (Eigen::Index k = 0; k < b; ++k) H.row(k) = data.features.row(order[static_cast<std::size_t>(start + k)]);
            const Mat A = augment_rows(cfg, H, rng);
            const Mat B = augment_rows(cfg, H, rng);
            const SimclrValue v = simclr_loss_and_grad(W, A, B, ctx.tau, G);
            const double anchors = 2.0 * static_cast<double>(b);
            if (!std::isfinite(v.total) || !G.allFinite())
                throw TrainingDivergedError("train_projector: non-finite loss", static_cast<std::size_t>(epoch));
            loss_sum += v.total / anchors;
            ++batches;
            if (adam) {
                G /= anchors;
                ++t_adam;
                m1 = tc.adam_beta1 * m1 + (1.0 - tc.adam_beta1) * G;
                m2 = tc.adam_beta2 * m2 + (1.0 - tc.adam_beta2) * G.cwiseAbs2();
                const double c1 = 1.0 - std::pow(tc.adam_beta1, static_cast<double>(t_adam));
                const double c2 = 1.0 - std::pow(tc.adam_beta2, static_cast<double>(t_adam));
                W.array() -= step * (m1.array() / c1) / ((m2.array() / c2).sqrt() + tc.adam_eps);
            } else {
                W -= (step / anchors) * G;
            }
            renormalize(W);
        }
        record(tr, W, cfg, loss_sum / batches);
    }
    tr.final_W = W;
    return tr;
}

TrainTrace train_closed_form(const GmmConfig& cfg, const LossContext& ctx, const TrainConfig& tc,
                             const std::optional<Dataset>& dataset) {
    std::function<double(const Mat&)> f;
    if (tc.objective == Objective::PopulationClosedForm) {
        f = [&](const Mat& W) { return population_loss(Projector(W), ctx).total; };
    } else {
        if (!dataset) throw DomainError("train_projector: finite-sample objective needs a dataset");
        f = [&](const Mat& W) { return finite_sample_loss(Projector(W), *dataset, ctx); };
    }
    TrainTrace tr;
    Mat W = initial_matrix(tc, cfg.p);
    renormalize(W);
    double fw = f(W);
    if (!std::isfinite(fw)) throw TrainingDivergedError("train_projector: non-finite initial loss", 0);
    double step = tc.step_size;
    const double h = 1e-6;
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        const Mat g = finite_difference_gradient(f, W, h);
        if (!g.allFinite()) throw TrainingDivergedError("train_projector: non-finite gradient", static_cast<std::size_t>(epoch));
        bool accepted = false;
        for (int tries = 0; tries < 60; ++tries) {
            Mat cand = W - step * g;
            renormalize(cand);
            const double fc = f(cand);
            if (std::isfinite(fc) && fc <= fw) {
                W = cand;
                fw = fc;
                accepted = true;
                break;
            }
            step *= 0.5;
            ++tr.halvings;
        }
        record(tr, W, cfg, fw);
        if (!accepted) {
            tr.converged = true;  // no descent possible at machine precision
            break;
        }
        const std::size_t k = tr.loss_per_epoch.size();
        if (k > static_cast<std::size_t>(tc.patience)) {
            const double prev = tr.loss_per_epoch[k - 1 - static_cast<std::size_t>(tc.patience)];
            if (std::abs(prev - fw) <= tc.rel_tol * std::max(1.0, std::abs(fw))) {
                tr.converged = true;
                break;
            }
        }
    }
    tr.final_W = W;
    return tr;
}

}  // namespace

TrainTrace train_projector(const GmmConfig& cfg, const LossContext& ctx, const TrainConfig& tc,
                           const std::optional<Dataset>& dataset) {
    cfg.validate();
    ctx.validate();
    tc.validate();
    if (tc.objective == Objective::EmpiricalSimclr) {
        if (!dataset) throw DomainError("train_projector: empirical objective needs a dataset");
        return train_stochastic(cfg, ctx, tc, *dataset);
    }
    return train_closed_form(cfg, ctx, tc, dataset);
}

std::vector<double> cumulative_alignment_scores(const Projector& W, const Vec& direction) {
    if (direction.size() != W.dim()) throw ShapeError("cumulative_alignment_scores: dimension mismatch");
    const double d2 = direction.squaredNorm();
    if (!(d2 > 0.0)) throw DomainError("cumulative_alignment_scores: zero direction");
    std::vector<double> out(static_cast<std::size_t>(W.dim()));
    double acc = 0.0;
    for (int j = 0; j < W.dim(); ++j) {
        const double c = W.svd().right_vectors.col(j).dot(direction);
        acc += c * c / d2;
        out[static_cast<std::size_t>(j)] = acc;
    }
    return out;
}

SpectralReport spectral_report(const Projector& W, const Vec& mu, const std::optional<Vec>& v_aug) {
    if (mu.size() != W.dim()) throw ShapeError("spectral_report: dimension mismatch");
    if (v_aug && v_aug->size() != W.dim()) throw ShapeError("spectral_report: spike direction has wrong length");
    SpectralReport rep;
    const Vec& s = W.svd().singular_values;
    rep.singular_values.assign(s.data(), s.data() + s.size());
    rep.mu_scores = cumulative_alignment_scores(W, mu);
    if (v_aug) rep.v_aug_scores = cumulative_alignment_scores(W, *v_aug);
    rep.expansion = expansion_measure(W, mu);
    return rep;
}

void write_trace_csv(const TrainTrace& trace, std::ostream& os) {
    write_csv_row(os, {"epoch", "loss", "t", "T"});
    for (std::size_t e = 0; e < trace.loss_per_epoch.size(); ++e) {
        write_csv_row(os, {std::to_string(e + 1), format_number(trace.loss_per_epoch[e]),
                           format_number(trace.t_per_epoch[e]), format_number(trace.T_per_epoch[e])});
    }
}

void write_spectral_csv(const SpectralReport& rep, std::ostream& os) {
    const bool has_v = !rep.v_aug_scores.empty();
    std::vector<std::string> head{"index", "singular_value", "mu_score"};
    if (has_v) head.push_back("v_aug_score");
    write_csv_row(os, head);
    for (std::size_t j = 0; j < rep.singular_values.size(); ++j) {
        std::vector<std::string> row{std::to_string(j + 1), format_number(rep.singular_values[j]),
                                     format_number(rep.mu_scores[j])};
        if (has_v) row.push_back(format_number(rep.v_aug_scores[j]));
        write_csv_row(os, row);
    }
}

}  // namespace projhead
