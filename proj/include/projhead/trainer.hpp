// Gradient-based minimization of contrastive losses over a linear projector,
// plus spectral diagnostics of the result.
#pragma once

#include "projhead/loss.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

namespace projhead {

enum class Objective { EmpiricalSimclr, PopulationClosedForm, FiniteSampleClosedForm };
enum class InitKind { Orthogonal, Identity, Given };
// Update rule for the stochastic objective (closed forms always use
// gradient descent with step halving).
enum class Optimizer { Sgd, Adam };

struct TrainConfig {
    // For EmpiricalSimclr the update is W -= step_size * tau * grad of the
    // per-anchor mean loss; for closed forms it is W -= step_size * grad.
    double step_size = 40.0;
    int epochs = 200;
    int batch_size = 500;
    std::uint64_t seed = 0;
    Objective objective = Objective::EmpiricalSimclr;
    InitKind init = InitKind::Orthogonal;
    Mat given;                // used when init == Given
    bool decay_step = true;   // linear decay to zero (stochastic objective only)
    // Adam: W -= step_size * m_hat / (sqrt(v_hat) + adam_eps), no tau scaling.
    Optimizer optimizer = Optimizer::Sgd;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-12;
    double rel_tol = 1e-9;    // closed forms: relative change over `patience` epochs
    int patience = 5;

    void validate() const;
};

struct TrainTrace {
    std::vector<double> loss_per_epoch;
    std::vector<double> t_per_epoch;
    std::vector<double> T_per_epoch;
    Mat final_W;
    bool converged = false;  // closed forms only: tolerance met before budget
    int halvings = 0;

    Projector final_projector() const { return Projector(final_W); }
};

// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
// R diagonal made positive).
Mat init_orthogonal(int p, std::uint64_t seed);

TrainTrace train_projector(const GmmConfig& cfg, const LossContext& ctx, const TrainConfig& tc,
                           const std::optional<Dataset>& dataset = std::nullopt);

// Central-difference gradient of a scalar matrix function.
Mat finite_difference_gradient(const std::function<double(const Mat&)>& f, const Mat& W, double h);

// score_i = sum_{j <= i} <v_j, d>^2 / |d|^2 over right singular vectors.
std::vector<double> cumulative_alignment_scores(const Projector& W, const Vec& direction);

struct SpectralReport {
    std::vector<double> singular_values;
    std::vector<double> mu_scores;
    std::vector<double> v_aug_scores;  // empty when no spike direction given
    double expansion = 0.0;
};

SpectralReport spectral_report(const Projector& W, const Vec& mu, const std::optional<Vec>& v_aug = std::nullopt);

void write_trace_csv(const TrainTrace& trace, std::ostream& os);
void write_spectral_csv(const SpectralReport& rep, std::ostream& os);

}  // namespace projhead
