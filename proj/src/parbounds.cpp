#include "mtebounds/parbounds.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mtebounds/errors.hpp"
#include "mtebounds/normal.hpp"

namespace mtebounds {

OutcomeGrid parametric_grid(const Sample& sample, int bins)
{
    if (bins < 1) throw ConfigError("parametric grid needs at least one bin");
    return quantile_grid(sample, bins + 1);
}

Eigen::RowVectorXd parametric_regressors(double p, const Eigen::RowVectorXd& x)
{
    Eigen::RowVectorXd r(3 + x.size());
    r << 1.0, p, p * p, x;
    return r;
}

ParametricFit fit_parametric(const Sample& sample, const PropensityFit& propensity, const CovariateMatrix& covariates,
                             const OutcomeGrid& grid, const LogitOptions& options)
{
    if (covariates.rows() != sample.size() && covariates.cols() > 0)
        throw ConfigError("fit_parametric: covariate rows do not match the sample");
    if (!covariates.allFinite()) throw ConfigError("fit_parametric: covariates contain missing or infinite values");
    std::vector<Eigen::Index> kept;
    for (Eigen::Index i = 0; i < sample.size(); ++i)
        if (propensity.keptMask[static_cast<std::size_t>(i)]) kept.push_back(i);
    const auto m = static_cast<Eigen::Index>(kept.size());
    const Eigen::Index q = covariates.cols();

    Eigen::MatrixXd X(m, 3 + q);
    for (Eigen::Index r = 0; r < m; ++r) {
        Eigen::Index i = kept[static_cast<std::size_t>(r)];
        Eigen::RowVectorXd x = q > 0 ? Eigen::RowVectorXd(covariates.row(i)) : Eigen::RowVectorXd();
        X.row(r) = parametric_regressors(propensity.phat(i), x);
    }
    std::vector<std::string> names = {"intercept", "p", "p2"};
    for (Eigen::Index j = 0; j < q; ++j) names.push_back("x" + std::to_string(j + 1));

    ParametricFit fit;
    fit.propensityCoefficients = propensity.logit.coefficients;
    fit.grid = grid;
    fit.numCovariates = static_cast<int>(q);
    const Eigen::Index K = grid.bins();
    for (int d = 0; d < 2; ++d) {
        Eigen::VectorXd sel(m);
        Eigen::MatrixXd binY = Eigen::MatrixXd::Zero(m, K);
        for (Eigen::Index r = 0; r < m; ++r) {
            Eigen::Index i = kept[static_cast<std::size_t>(r)];
            bool hit = sample.s(i) == 1.0 && sample.d(i) == static_cast<double>(d);
            sel(r) = hit ? 1.0 : 0.0;
            if (hit) {
                Eigen::Index k = grid.bin_of(sample.y(i));
                if (k >= 0) binY(r, k) = 1.0;
            }
        }
        const std::string arm = "arm " + std::to_string(d);
        fit.selection[static_cast<std::size_t>(d)] = logit_mle(X, sel, names, options, "selection model (" + arm + ")");
        auto& binFits = fit.bins[static_cast<std::size_t>(d)];
        for (Eigen::Index k = 0; k < K; ++k)
            binFits.push_back(logit_mle(X, binY.col(k), names, options,
                                        "outcome bin " + std::to_string(k + 1) + " model (" + arm + ")"));
    }
    return fit;
}

ConditionalOutcomeTable parametric_derivatives(const ParametricFit& fit, double p, const Eigen::RowVectorXd& x)
{
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("parametric_derivatives: p must lie in (0,1)");
    if (x.size() != fit.numCovariates) throw ConfigError("parametric_derivatives: covariate dimension mismatch");
    const Eigen::RowVectorXd r = parametric_regressors(p, x);
    // d/dp of Lambda(r * c) = lambda(r * c) (c_p + 2 c_p2 p); arm 0 enters with a minus sign.
    auto slope = [&](const LogitFit& f, double sign) {
        const Eigen::VectorXd& c = f.coefficients;
        return sign * logistic_pdf(r.dot(c)) * (c(1) + 2.0 * c(2) * p);
    };
    ConditionalOutcomeTable t;
    t.p = p;
    t.grid = fit.grid;
    const Eigen::Index K = fit.grid.bins();
    t.gamma0.resize(K);
    t.gamma1.resize(K);
    t.pi0 = slope(fit.selection[0], -1.0);
    t.pi1 = slope(fit.selection[1], 1.0);
    for (Eigen::Index k = 0; k < K; ++k) {
        t.gamma0(k) = slope(fit.bins[0][static_cast<std::size_t>(k)], -1.0);
        t.gamma1(k) = slope(fit.bins[1][static_cast<std::size_t>(k)], 1.0);
    }
    finalize_table(t);
    return t;
}

double consistency_gap(const ConditionalOutcomeTable& t)
{
    return std::max(std::abs(t.rawMass0 - t.pi0), std::abs(t.rawMass1 - t.pi1));
}

ScmtePoint average_bounds(double p, Tier tier, const std::vector<BoundPoint>& rows)
{
    ScmtePoint out;
    out.bound.p = p;
    out.bound.tier = tier;
    double lo = 0.0, hi = 0.0, alpha = 0.0, beta = 0.0, vLower = 0.0, xi0 = 0.0;
    long used = 0;
    bool allIdentified = true;
    for (const BoundPoint& b : rows) {
        if (!b.finite()) continue;
        lo += b.lower;
        hi += b.upper;
        alpha += b.alpha;
        beta += b.beta;
        vLower += b.vLower;
        xi0 += b.xi0;
        allIdentified = allIdentified && b.status == BoundStatus::Identified;
        ++used;
    }
    const double n = static_cast<double>(rows.size());
    out.nonestimableShare = rows.empty() ? 1.0 : 1.0 - static_cast<double>(used) / n;
    out.flagged = out.nonestimableShare > 0.5;
    if (used == 0) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        out.bound.lower = out.bound.upper = out.bound.alpha = out.bound.beta = out.bound.vLower = out.bound.xi0 = nan;
        out.bound.status = BoundStatus::NonEstimable;
        return out;
    }
    const double u = static_cast<double>(used);
    out.bound.lower = lo / u;
    out.bound.upper = hi / u;
    out.bound.alpha = alpha / u;
    out.bound.beta = beta / u;
    out.bound.vLower = vLower / u;
    out.bound.xi0 = xi0 / u;
    out.bound.status = allIdentified ? BoundStatus::Identified : BoundStatus::Partial;
    return out;
}

std::vector<ScmtePoint> scmte_bounds(const ParametricFit& fit, const CovariateMatrix& covariates,
                                     const std::vector<double>& pGrid, Tier tier, TrimMode mode)
{
    if (covariates.cols() != fit.numCovariates) throw ConfigError("scmte_bounds: covariate dimension mismatch");
    // Without covariates the average is over a single empty row.
    const Eigen::Index rows = covariates.cols() == 0 ? 1 : covariates.rows();
    std::vector<ScmtePoint> out;
    for (double p : pGrid) {
        std::vector<BoundPoint> perRow;
        perRow.reserve(static_cast<std::size_t>(rows));
        for (Eigen::Index i = 0; i < rows; ++i) {
            Eigen::RowVectorXd x = covariates.cols() == 0 ? Eigen::RowVectorXd() : Eigen::RowVectorXd(covariates.row(i));
            perRow.push_back(bounds_at(parametric_derivatives(fit, p, x), tier, mode));
        }
        out.push_back(average_bounds(p, tier, perRow));
    }
    return out;
}

}  // namespace mtebounds
