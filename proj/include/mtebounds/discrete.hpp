#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mtebounds/dgp.hpp"
#include "mtebounds/npbounds.hpp"
#include "mtebounds/smoother.hpp"

namespace mtebounds {

struct DiscreteLevel {
    std::vector<double> zValues;  // instrument values pooled into this level
    double count = 0.0;
    double p = 0.0;      // P[D = 1 | level]
    double eSD = 0.0;    // E[S D | level]
    double eSU = 0.0;    // E[S (1 - D) | level]
    Eigen::VectorXd q1;  // P[Y in bin k, S = 1, D = 1 | level]
    Eigen::VectorXd q0;  // P[Y in bin k, S = 1, D = 0 | level]
};

// Instrument levels sorted by propensity, levels with equal propensity merged.
struct DiscreteLadder {
    OutcomeGrid grid;
    std::vector<DiscreteLevel> levels;
};

struct LateBound {
    int ell = 2;  // 1-based index of the upper level of the interval
    double pLo = 0.0;
    double pHi = 0.0;
    double alphaTilde = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double xi0 = 0.0;
    bool violation = false;  // a selection difference quotient has the wrong sign
    BoundStatus status = BoundStatus::Partial;
};

// Cell means by distinct value of instrument column `zColumn`.
DiscreteLadder build_ladder(const Sample& sample, const OutcomeGrid& grid, int zColumn = 0);

// Monotone-selection LATE bounds for the interval (p_{ell-1}, p_ell].
LateBound late_bounds(const DiscreteLadder& ladder, int ell, TrimMode mode = TrimMode::Verbatim);
std::vector<LateBound> all_late_bounds(const DiscreteLadder& ladder, TrimMode mode = TrimMode::Verbatim);

// Exact population ladder of the simulation design when its instrument is
// coarsened into `cells` equal-probability cells, computed by quadrature.
DiscreteLadder population_ladder(const DgpConfig& config, int cells, const OutcomeGrid& grid);

}  // namespace mtebounds
