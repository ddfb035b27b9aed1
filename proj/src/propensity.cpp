#include "mtebounds/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mtebounds/errors.hpp"
#include "mtebounds/normal.hpp"

namespace mtebounds {

namespace {

double log_likelihood(const Eigen::VectorXd& eta, const Eigen::VectorXd& y)
{
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        // log(1 + exp(eta)) computed stably
        double e = eta(i);
        double softplus = e > 0.0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
        ll += y(i) * e - softplus;
    }
    return ll;
}

std::string describe_direction(const Eigen::VectorXd& beta, const std::vector<std::string>& names)
{
    std::ostringstream out;
    Eigen::VectorXd dir = beta / beta.norm();
    out << "[";
    for (Eigen::Index j = 0; j < dir.size(); ++j) {
        if (j > 0) out << ", ";
        out << names[static_cast<std::size_t>(j)] << "=" << dir(j);
    }
    out << "]";
    return out.str();
}

}  // namespace

LogitFit logit_mle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& names,
                   const LogitOptions& options, const std::string& label)
{
    const Eigen::Index n = X.rows();
    const Eigen::Index k = X.cols();
    if (n == 0 || y.size() != n) throw ConfigError(label + ": empty or misaligned data");
    if (static_cast<Eigen::Index>(names.size()) != k) throw ConfigError(label + ": column names mismatch");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < k) {
        std::ostringstream msg;
        msg << label << ": design matrix is rank deficient (rank " << qr.rank() << " of " << k
            << "); collinear columns:";
        for (Eigen::Index j = qr.rank(); j < k; ++j)
            msg << " " << names[static_cast<std::size_t>(qr.colsPermutation().indices()(j))];
        throw RankDeficientError(msg.str());
    }

    LogitFit fit;
    fit.names = names;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd eta = X * beta;
    double ll = log_likelihood(eta, y);
    const double invN = 1.0 / static_cast<double>(n);
    bool converged = false;
    int it = 0;
    for (; it < options.maxIterations; ++it) {
        Eigen::VectorXd mu = eta.unaryExpr([](double e) { return logistic(e); });
        Eigen::VectorXd grad = X.transpose() * (y - mu) * invN;
        if (grad.lpNorm<Eigen::Infinity>() < options.gradientTol) {
            converged = true;
            break;
        }
        Eigen::VectorXd w = mu.cwiseProduct(Eigen::VectorXd::Ones(n) - mu);
        Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X * invN;
        Eigen::VectorXd step = H.ldlt().solve(grad);
        double t = 1.0;
        bool improved = false;
        for (int h = 0; h < 40; ++h) {
            Eigen::VectorXd candidate = beta + t * step;
            Eigen::VectorXd candEta = X * candidate;
            double candLl = log_likelihood(candEta, y);
            if (std::isfinite(candLl) && candLl >= ll - 1e-12 * std::abs(ll)) {
                beta = candidate;
                eta = candEta;
                ll = candLl;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if (!improved) break;
        if (eta.lpNorm<Eigen::Infinity>() > options.separationIndex) break;
    }
    fit.iterations = it;
    if (eta.lpNorm<Eigen::Infinity>() > options.separationIndex)
        throw SeparationError(label + ": likelihood is unbounded (separation) along coefficient direction " +
                              describe_direction(beta, names));
    if (!converged) {
        std::ostringstream msg;
        msg << label << ": Newton-Raphson did not converge in " << options.maxIterations << " iterations";
        throw NumericalError(msg.str());
    }
    Eigen::VectorXd mu = eta.unaryExpr([](double e) { return logistic(e); });
    Eigen::VectorXd w = mu.cwiseProduct(Eigen::VectorXd::Ones(n) - mu);
    Eigen::MatrixXd info = X.transpose() * w.asDiagonal() * X;
    fit.coefficients = beta;
    fit.covariance = info.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    fit.logLikelihood = ll;
    return fit;
}

void PropensityConfig::validate() const
{
    if (!(lambdaTrim >= 0.0 && lambdaTrim < 0.5)) throw ConfigError("lambdaTrim must lie in [0, 0.5)");
    if (!(supportTrimPct >= 0.0 && supportTrimPct < 0.5)) throw ConfigError("supportTrimPct must lie in [0, 0.5)");
}

Eigen::Index PropensityFit::kept_count() const
{
    return std::count(keptMask.begin(), keptMask.end(), true);
}

Eigen::MatrixXd propensity_design(const Sample& sample, const PropensityConfig& config,
                                  std::vector<std::string>* names)
{
    std::vector<int> zc;
    if (config.zColumns) {
        zc = *config.zColumns;
    } else {
        zc.resize(static_cast<std::size_t>(sample.z.cols()));
        std::iota(zc.begin(), zc.end(), 0);
    }
    for (int c : zc)
        if (c < 0 || c >= sample.z.cols()) throw ConfigError("propensity: instrument column out of range");
    const Eigen::Index nx = config.includeCovariates ? sample.x.cols() : 0;
    const Eigen::Index k = (config.intercept ? 1 : 0) + static_cast<Eigen::Index>(zc.size()) + nx;
    if (k == 0) throw ConfigError("propensity: empty index specification");
    Eigen::MatrixXd X(sample.size(), k);
    std::vector<std::string> nm;
    Eigen::Index col = 0;
    if (config.intercept) {
        X.col(col++).setOnes();
        nm.push_back("intercept");
    }
    for (int c : zc) {
        X.col(col++) = sample.z.col(c);
        nm.push_back("z" + std::to_string(c + 1));
    }
    for (Eigen::Index j = 0; j < nx; ++j) {
        X.col(col++) = sample.x.col(j);
        nm.push_back("x" + std::to_string(j + 1));
    }
    if (names) *names = nm;
    return X;
}

PropensityFit fit_logit(const Sample& sample, const PropensityConfig& config)
{
    config.validate();
    std::vector<std::string> names;
    Eigen::MatrixXd X = propensity_design(sample, config, &names);
    PropensityFit fit;
    fit.logit = logit_mle(X, sample.d, names, config.logit, "propensity logit");
    const double lam = config.lambdaTrim;
    fit.phat = (X * fit.logit.coefficients).unaryExpr([lam](double e) {
        return std::clamp(logistic(e), lam, 1.0 - lam);
    });

    const Eigen::Index n = sample.size();
    double min1 = 1.0, max1 = 0.0, min0 = 1.0, max0 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double p = fit.phat(i);
        if (sample.d(i) == 1.0) {
            min1 = std::min(min1, p);
            max1 = std::max(max1, p);
        } else {
            min0 = std::min(min0, p);
            max0 = std::max(max0, p);
        }
    }
    fit.overlapLo = std::max(min1, min0);
    fit.overlapHi = std::min(max1, max0);
    std::vector<Eigen::Index> inside;
    for (Eigen::Index i = 0; i < n; ++i)
        if (fit.phat(i) >= fit.overlapLo && fit.phat(i) <= fit.overlapHi) inside.push_back(i);
    if (inside.empty()) throw NumericalError("propensity: treated and untreated fitted values do not overlap");

    std::stable_sort(inside.begin(), inside.end(),
                     [&fit](Eigen::Index a, Eigen::Index b) { return fit.phat(a) < fit.phat(b); });
    const std::size_t drop = static_cast<std::size_t>(std::floor(config.supportTrimPct * inside.size()));
    fit.keptMask.assign(static_cast<std::size_t>(n), false);
    for (std::size_t r = drop; r + drop < inside.size(); ++r) fit.keptMask[static_cast<std::size_t>(inside[r])] = true;
    return fit;
}

Eigen::VectorXd predict_propensity(const PropensityFit& fit, const Sample& rows, const PropensityConfig& config)
{
    Eigen::MatrixXd X = propensity_design(rows, config);
    if (X.cols() != fit.logit.coefficients.size()) throw ConfigError("predict_propensity: design mismatch");
    const double lam = config.lambdaTrim;
    return (X * fit.logit.coefficients).unaryExpr([lam](double e) { return std::clamp(logistic(e), lam, 1.0 - lam); });
}

}  // namespace mtebounds
