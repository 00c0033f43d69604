#include "pcgen/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pcgen::ot {

double cost(std::span<const double> x, std::span<const double> y, Metric metric) {
    if (x.size() != y.size())
        throw std::invalid_argument("cost: dimension mismatch (" + std::to_string(x.size()) +
                                    " vs " + std::to_string(y.size()) + ")");
    double acc = 0.0;
    if (metric == Metric::L1) {
        for (std::size_t k = 0; k < x.size(); ++k) acc += std::abs(x[k] - y[k]);
        return acc;
    }
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = x[k] - y[k];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double cost_rows(const Cloud& X, int i, const Cloud& Y, int j, Metric metric) {
    return cost(std::span<const double>(X.data() + static_cast<std::size_t>(i) * X.cols(), X.cols()),
                std::span<const double>(Y.data() + static_cast<std::size_t>(j) * Y.cols(), Y.cols()),
                metric);
}

diff::Matrix cost_matrix(const Cloud& X, const Cloud& Y, Metric metric) {
    if (X.cols() != Y.cols())
        throw std::invalid_argument("cost_matrix: dimension mismatch");
    diff::Matrix C(X.rows(), Y.rows());
    for (int i = 0; i < X.rows(); ++i)
        for (int j = 0; j < Y.rows(); ++j) C(i, j) = cost_rows(X, i, Y, j, metric);
    return C;
}

double mean_pairwise_cost(const Cloud& X, const Cloud& Y, Metric metric) {
    if (X.rows() < 1 || Y.rows() < 1)
        throw std::invalid_argument("mean_pairwise_cost: empty cloud");
    const diff::Matrix C = cost_matrix(X, Y, metric);
    return exact_sum(C.values()) / static_cast<double>(C.size());
}

AuctionConfig AuctionConfig::single_phase(double eps) {
    AuctionConfig cfg;
    cfg.eps_final = eps;
    cfg.init_fraction = 0.0;  // start directly at eps_final
    return cfg;
}

void AuctionConfig::validate() const {
    if (!(eps_final > 0.0)) throw std::invalid_argument("AuctionConfig: eps_final must be > 0");
    if (!(scale_factor > 1.0))
        throw std::invalid_argument("AuctionConfig: scale_factor must be > 1");
    if (max_rounds < 1) throw std::invalid_argument("AuctionConfig: max_rounds must be >= 1");
}

namespace {

double matched_total(const diff::Matrix& C, const std::vector<int>& target_of) {
    std::vector<double> terms(target_of.size());
    for (std::size_t i = 0; i < target_of.size(); ++i)
        terms[i] = C(static_cast<int>(i), target_of[i]);
    return exact_sum(terms);
}

/// One scaling phase: everything starts unassigned, prices persist.
/// Returns the number of bidding rounds executed.
long auction_phase(const diff::Matrix& C, double eps, std::vector<double>& price,
                   std::vector<int>& target_of, long rounds_budget, double bid_floor_drop) {
    const int n = C.rows();
    std::vector<int> owner_of(static_cast<std::size_t>(n), -1);
    std::fill(target_of.begin(), target_of.end(), -1);

    std::vector<double> best_bid(static_cast<std::size_t>(n));
    std::vector<int> best_bidder(static_cast<std::size_t>(n), -1);
    int unassigned = n;
    long rounds = 0;

    while (unassigned > 0) {
        if (rounds >= rounds_budget) return -1;
        ++rounds;
        std::fill(best_bidder.begin(), best_bidder.end(), -1);
        // Bidding: every unassigned source works from the same price snapshot.
        for (int i = 0; i < n; ++i) {
            if (target_of[static_cast<std::size_t>(i)] != -1) continue;
            int bj = -1;
            double v = -std::numeric_limits<double>::infinity();
            double w = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < n; ++j) {
                const double val = -C(i, j) - price[static_cast<std::size_t>(j)];
                if (val > v) {
                    w = v;
                    v = val;
                    bj = j;
                } else if (val > w) {
                    w = val;
                }
            }
            if (!std::isfinite(w)) w = v - bid_floor_drop;  // n == 1: no second-best target
            const double bid = -C(i, bj) - w + eps;         // price that makes bj marginal
            if (best_bidder[static_cast<std::size_t>(bj)] == -1 ||
                bid > best_bid[static_cast<std::size_t>(bj)]) {
                best_bid[static_cast<std::size_t>(bj)] = bid;
                best_bidder[static_cast<std::size_t>(bj)] = i;
            }
        }
        // Awards: each contested target goes to its highest bidder.
        for (int j = 0; j < n; ++j) {
            const int wnr = best_bidder[static_cast<std::size_t>(j)];
            if (wnr == -1) continue;
            price[static_cast<std::size_t>(j)] = best_bid[static_cast<std::size_t>(j)];
            const int prev = owner_of[static_cast<std::size_t>(j)];
            if (prev != -1) {
                target_of[static_cast<std::size_t>(prev)] = -1;
                ++unassigned;
            }
            owner_of[static_cast<std::size_t>(j)] = wnr;
            target_of[static_cast<std::size_t>(wnr)] = j;
            --unassigned;
        }
    }
    return rounds;
}

}  // namespace

Assignment auction_assign(const Cloud& X, const Cloud& Y, const AuctionConfig& cfg, Metric metric) {
    if (X.rows() != Y.rows())
        throw std::invalid_argument("auction_assign: clouds must have equal size (" +
                                    std::to_string(X.rows()) + " vs " + std::to_string(Y.rows()) + ")");
    if (X.rows() < 1) throw std::invalid_argument("auction_assign: empty clouds");
    cfg.validate();

    const int n = X.rows();
    const diff::Matrix C = cost_matrix(X, Y, metric);
    double max_cost = 0.0;
    for (double v : C.values()) max_cost = std::max(max_cost, v);

    Assignment out;
    out.target_of.assign(static_cast<std::size_t>(n), -1);

    if (max_cost == 0.0) {  // all-zero costs: any bijection is optimal
        for (int i = 0; i < n; ++i) out.target_of[static_cast<std::size_t>(i)] = i;
        out.eps_final = cfg.eps_final;
        out.gap_bound = 0.0;
        return out;
    }

    std::vector<double> price(static_cast<std::size_t>(n), 0.0);
    const double bid_floor_drop = max_cost + 1.0;
    double eps = std::max(cfg.init_fraction * max_cost, cfg.eps_final);
    long rounds_left = cfg.max_rounds;

    while (true) {
        const long used = auction_phase(C, eps, price, out.target_of, rounds_left, bid_floor_drop);
        if (used < 0)
            throw NumericError("auction_assign: no assignment after " +
                               std::to_string(cfg.max_rounds) + " rounds (n=" + std::to_string(n) +
                               ", eps=" + std::to_string(eps) + ")");
        rounds_left -= used;
        out.rounds += used;
        out.phase_eps.push_back(eps);
        out.phase_costs.push_back(matched_total(C, out.target_of));
        if (eps <= cfg.eps_final) break;
        eps = std::max(eps / cfg.scale_factor, cfg.eps_final);
    }

    out.total_cost = out.phase_costs.back();
    out.average_cost = out.total_cost / n;
    out.eps_final = out.phase_eps.back();
    out.gap_bound = n * out.eps_final;
    return out;
}

Assignment hungarian_assign_matrix(const diff::Matrix& C) {
    if (C.rows() != C.cols()) throw std::invalid_argument("hungarian: cost matrix must be square");
    const int n = C.rows();
    if (n < 1) throw std::invalid_argument("hungarian: empty cost matrix");
    if (n > 512) throw std::invalid_argument("hungarian: size cap 512 exceeded (test-scale oracle)");

    const double INF = std::numeric_limits<double>::infinity();
    // Shortest augmenting paths with potentials; 1-indexed with a virtual
    // column 0. p[j] = row currently matched to column j.
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, INF);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            int j1 = -1;
            double delta = INF;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = C(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                                   v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    Assignment out;
    out.target_of.assign(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j) out.target_of[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    out.total_cost = matched_total(C, out.target_of);
    out.average_cost = out.total_cost / n;
    return out;
}

Assignment hungarian_assign(const Cloud& X, const Cloud& Y, Metric metric) {
    if (X.rows() != Y.rows())
        throw std::invalid_argument("hungarian_assign: clouds must have equal size");
    return hungarian_assign_matrix(cost_matrix(X, Y, metric));
}

double w_upper(const Cloud& X, const Cloud& Y, const AuctionConfig& cfg, Metric metric) {
    return auction_assign(X, Y, cfg, metric).average_cost;
}

AuctionConfig auction_config_rel(const Cloud& X, const Cloud& Y, double eps_rel, Metric metric) {
    if (!(eps_rel > 0.0)) throw std::invalid_argument("auction_config_rel: eps_rel must be > 0");
    AuctionConfig cfg;
    const double mean_cost = mean_pairwise_cost(X, Y, metric);
    cfg.eps_final = std::max(eps_rel * mean_cost / X.rows(), 1e-300);
    return cfg;
}

}  // namespace pcgen::ot
