#pragma once

#include <span>
#include <vector>

#include "pcgen/nets.hpp"

namespace pcgen::losses {

struct SandwichConfig {
    /// Weight on the lower bound; weight(W_L):weight(W_U) defaults to 1:20.
    double lambda = 1.0 / 21.0;
};

/// (1 - lambda) * w_u + lambda * w_l. Lambda outside [0,1] is rejected.
double sandwich_loss(double w_u, double w_l, double lambda);

struct LowerBoundConfig {
    int critic_steps = 5;
    double clip_c = 0.5;
    double rho = 1.0;     // quadratic penalty weight; also the multiplier rate
    double alpha = 0.0;   // Lagrange multiplier state
};

/// Mean critic score on real minus mean on fake. Divide by the critic's
/// Lipschitz bound to get a quantity that never exceeds the exact
/// empirical transport cost.
double w_lower_value(nets::Critic& critic, const Cloud& real_pts, const Cloud& fake_pts);

struct CriticUpdateResult {
    double objective = 0.0;   // penalized objective after the step direction
    double ipm_gap = 0.0;     // E_real f - E_fake f at the evaluated point
    double constraint = 0.0;  // 0.5 E_real f^2 + 0.5 E_fake f^2 - 1
};

/// One ascent step on the IPM objective with the L2-ball constraint as an
/// augmented Lagrangian, followed by weight clipping. The multiplier in
/// `cfg.alpha` advances by rho * constraint.
CriticUpdateResult critic_update(nets::Critic& critic, const Cloud& real_pts,
                                 const Cloud& fake_pts, LowerBoundConfig& cfg, diff::Adam& opt);

struct Lemma1Result {
    double lambda_star = 0.0;
    double achieved_error = 0.0;
    double err_upper = 0.0;   // |W_U - w| for the worst-case upper estimator
    double err_lower = 0.0;   // |W_L - w|
    double window_lo = 0.0;   // (eps2 - eps1) / (eps2 + eps1)
    double window_hi = 0.5;
};

/// Brute-force check of the sandwiching guarantee: builds the worst-case
/// one-sided estimators W_U = (1+eps2) w and W_L = (1-eps2) w, sweeps the
/// grid restricted to the admissible window, and returns the lambda whose
/// combined estimate beats both sides. Hypothesis violations throw with the
/// violated inequality named. An empty grid means 99 evenly spaced points
/// inside the window.
Lemma1Result lemma1_verify(double w, double eps1, double eps2,
                           std::span<const double> lambda_grid = {});

}  // namespace pcgen::losses
