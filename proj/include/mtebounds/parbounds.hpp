#pragma once

#include <array>
#include <vector>

#include "mtebounds/npbounds.hpp"
#include "mtebounds/propensity.hpp"
#include "mtebounds/smoother.hpp"

namespace mtebounds {

using CovariateMatrix = Eigen::MatrixXd;

// Logit index models in (p, p^2, x) for P[S = 1, D = d | x, p] and for
// P[Y in bin k, S = 1, D = d | x, p], each with an intercept.
struct ParametricFit {
    Eigen::VectorXd propensityCoefficients;
    OutcomeGrid grid;
    int numCovariates = 0;
    std::array<LogitFit, 2> selection;
    std::array<std::vector<LogitFit>, 2> bins;
};

// Outcome grid with `bins` quantile bins of the selected outcomes.
OutcomeGrid parametric_grid(const Sample& sample, int bins = 20);

// Column layout of the index: intercept, p, p2, x1..xq.
Eigen::RowVectorXd parametric_regressors(double p, const Eigen::RowVectorXd& x);

ParametricFit fit_parametric(const Sample& sample, const PropensityFit& propensity, const CovariateMatrix& covariates,
                             const OutcomeGrid& grid, const LogitOptions& options = {});

// Chain-rule slopes in p at covariate value x, cleaned as in the smoother.
ConditionalOutcomeTable parametric_derivatives(const ParametricFit& fit, double p, const Eigen::RowVectorXd& x);

// Largest |sum_k gamma_d - pi_d| over both arms.
double consistency_gap(const ConditionalOutcomeTable& table);

struct ScmtePoint {
    BoundPoint bound;
    double nonestimableShare = 0.0;
    bool flagged = false;  // more than half of the rows excluded
};

// Equal-weight average of the finite per-row bounds.
ScmtePoint average_bounds(double p, Tier tier, const std::vector<BoundPoint>& rows);

std::vector<ScmtePoint> scmte_bounds(const ParametricFit& fit, const CovariateMatrix& covariates,
                                     const std::vector<double>& pGrid, Tier tier,
                                     TrimMode mode = TrimMode::Verbatim);

}  // namespace mtebounds
