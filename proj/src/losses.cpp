#include "pcgen/losses.hpp"

#include <cmath>

namespace pcgen::losses {

double sandwich_loss(double w_u, double w_l, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw std::invalid_argument("sandwich_loss: lambda must lie in [0,1]");
    return (1.0 - lambda) * w_u + lambda * w_l;
}

double w_lower_value(nets::Critic& critic, const Cloud& real_pts, const Cloud& fake_pts) {
    if (real_pts.rows() < 1 || fake_pts.rows() < 1)
        throw std::invalid_argument("w_lower_value: empty batch");
    const diff::Matrix sr = critic.score(real_pts);
    const diff::Matrix sf = critic.score(fake_pts);
    return exact_mean(sr.values()) - exact_mean(sf.values());
}

CriticUpdateResult critic_update(nets::Critic& critic, const Cloud& real_pts,
                                 const Cloud& fake_pts, LowerBoundConfig& cfg, diff::Adam& opt) {
    if (real_pts.rows() < 1 || fake_pts.rows() < 1)
        throw std::invalid_argument("critic_update: empty batch");
    if (!(cfg.clip_c > 0.0)) throw std::invalid_argument("critic_update: clip range must be > 0");

    diff::Tape t;
    const auto sr = critic.forward(t, t.constant(real_pts), true);
    const auto sf = critic.forward(t, t.constant(fake_pts), true);
    const auto gap = t.sub(t.mean_all(sr), t.mean_all(sf));
    // constraint = 0.5 E_real f^2 + 0.5 E_fake f^2 - 1
    const auto moment = t.add(t.affine(t.mean_all(t.square(sr)), 0.5, 0.0),
                              t.affine(t.mean_all(t.square(sf)), 0.5, 0.0));
    const auto constraint = t.affine(moment, 1.0, -1.0);
    // J = gap - alpha * constraint - rho/2 * constraint^2, maximized
    const auto penalty = t.add(t.affine(constraint, cfg.alpha, 0.0),
                               t.affine(t.square(constraint), 0.5 * cfg.rho, 0.0));
    const auto objective = t.sub(gap, penalty);

    CriticUpdateResult res;
    res.ipm_gap = t.value(gap)(0, 0);
    res.constraint = t.value(constraint)(0, 0);
    res.objective = t.value(objective)(0, 0);
    if (!std::isfinite(res.objective))
        throw NumericError("critic_update: non-finite objective");

    t.backward_scalar(objective, -1.0);  // ascend
    opt.step();
    critic.clip(cfg.clip_c);
    cfg.alpha += cfg.rho * res.constraint;
    return res;
}

Lemma1Result lemma1_verify(double w, double eps1, double eps2,
                           std::span<const double> lambda_grid) {
    if (!(w > 0.0)) throw std::invalid_argument("lemma1_verify: requires w > 0");
    if (!(eps1 > 0.0)) throw std::invalid_argument("lemma1_verify: requires eps1 > 0");
    if (!(eps2 > eps1)) throw std::invalid_argument("lemma1_verify: requires eps2 > eps1");
    if (!(eps1 > eps2 / 3.0)) throw std::invalid_argument("lemma1_verify: requires eps1 > eps2/3");

    Lemma1Result res;
    res.window_lo = (eps2 - eps1) / (eps2 + eps1);
    res.window_hi = 0.5;

    // Worst-case one-sided estimators allowed by the hypotheses.
    const double upper = (1.0 + eps2) * w;
    const double lower = (1.0 - eps2) * w;
    res.err_upper = std::abs(upper - w);
    res.err_lower = std::abs(lower - w);
    const double one_sided = std::min(res.err_upper, res.err_lower);

    std::vector<double> fallback;
    if (lambda_grid.empty()) {
        fallback.reserve(99);
        for (int i = 1; i <= 99; ++i)
            fallback.push_back(res.window_lo + (res.window_hi - res.window_lo) * i / 100.0);
        lambda_grid = fallback;
    }

    bool found = false;
    for (double lam : lambda_grid) {
        if (!(lam > res.window_lo && lam < res.window_hi)) continue;
        const double err = std::abs(sandwich_loss(upper, lower, lam) - w);
        if (!found || err < res.achieved_error) {
            found = true;
            res.achieved_error = err;
            res.lambda_star = lam;
        }
    }
    if (!found)
        throw std::invalid_argument("lemma1_verify: no grid point inside the admissible window (" +
                                    std::to_string(res.window_lo) + ", 0.5)");
    if (!(res.achieved_error < one_sided))
        throw NumericError("lemma1_verify: sandwich estimate failed to beat one-sided error");
    return res;
}

}  // namespace pcgen::losses
