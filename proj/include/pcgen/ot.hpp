#pragma once

#include <vector>

#include "pcgen/diffcore.hpp"

namespace pcgen::ot {

enum class Metric { L1, L2 };

/// Ground cost between two points of equal dimension. L1 by default.
double cost(std::span<const double> x, std::span<const double> y, Metric metric = Metric::L1);

/// Cost between row i of X and row j of Y.
double cost_rows(const Cloud& X, int i, const Cloud& Y, int j, Metric metric = Metric::L1);

/// Full pairwise cost matrix (|X| x |Y|).
diff::Matrix cost_matrix(const Cloud& X, const Cloud& Y, Metric metric = Metric::L1);

/// Mean of all pairwise costs; the scale reference for relative epsilons.
double mean_pairwise_cost(const Cloud& X, const Cloud& Y, Metric metric = Metric::L1);

struct AuctionConfig {
    double eps_final = 1e-6;      // bid increment of the last scaling phase, cost units
    double scale_factor = 4.0;    // epsilon shrinks by this factor per phase; must be > 1
    double init_fraction = 0.25;  // eps0 = init_fraction * max cost entry
    long max_rounds = 1000000;

    /// Single phase at a fixed epsilon (no scaling); used for cheap
    /// training-time matchings.
    static AuctionConfig single_phase(double eps);

    void validate() const;
};

/// Bijective matching between two equal-size point sets.
struct Assignment {
    std::vector<int> target_of;  // source index -> target index, a bijection
    double total_cost = 0.0;
    double average_cost = 0.0;
    long rounds = 0;
    double eps_final = 0.0;  // epsilon achieved by the last phase
    double gap_bound = 0.0;  // n * eps_final: additive bound on total cost vs optimal
    std::vector<double> phase_costs;  // total cost after each scaling phase
    std::vector<double> phase_eps;    // epsilon of each phase
};

/// Bertsekas auction: unassigned sources bid simultaneously on their best
/// targets from a price snapshot, raising prices; highest bid wins, ties are
/// broken toward the lowest indices. With epsilon scaling the returned total
/// cost is within n * eps_final of the optimum.
Assignment auction_assign(const Cloud& X, const Cloud& Y, const AuctionConfig& cfg,
                          Metric metric = Metric::L1);

/// Exact optimal assignment (shortest augmenting paths with potentials).
/// Test-scale oracle; capped at n = 512.
Assignment hungarian_assign(const Cloud& X, const Cloud& Y, Metric metric = Metric::L1);

/// Exact optimal assignment for an explicit cost matrix.
Assignment hungarian_assign_matrix(const diff::Matrix& cost);

/// Average matched cost of the auction assignment; an upper bound on the
/// exact empirical transport cost.
double w_upper(const Cloud& X, const Cloud& Y, const AuctionConfig& cfg,
               Metric metric = Metric::L1);

/// Scaling schedule ending at eps_final = eps_rel * mean_pairwise_cost / n.
AuctionConfig auction_config_rel(const Cloud& X, const Cloud& Y, double eps_rel,
                                 Metric metric = Metric::L1);

}  // namespace pcgen::ot
