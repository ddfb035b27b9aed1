#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "mtebounds/dgp.hpp"

namespace mtebounds {

struct LogitOptions {
    int maxIterations = 100;
    // Convergence when the sup-norm of the mean score falls below this.
    double gradientTol = 1e-8;
    // Linear index magnitude beyond which the fit is declared separated.
    double separationIndex = 30.0;
};

struct LogitFit {
    Eigen::VectorXd coefficients;
    Eigen::MatrixXd covariance;  // inverse observed information
    std::vector<std::string> names;
    double logLikelihood = 0.0;
    int iterations = 0;

    Eigen::VectorXd standard_errors() const { return covariance.diagonal().cwiseSqrt(); }
};

// Maximum-likelihood logit by Newton-Raphson with step halving. `label`
// identifies the component in error messages.
LogitFit logit_mle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& names,
                   const LogitOptions& options = {}, const std::string& label = "logit");

struct PropensityConfig {
    double lambdaTrim = 0.001;
    double supportTrimPct = 0.01;
    bool intercept = true;
    // Instrument columns entering the index linearly; unset means all.
    std::optional<std::vector<int>> zColumns;
    bool includeCovariates = false;
    LogitOptions logit;

    void validate() const;
};

struct PropensityFit {
    LogitFit logit;
    Eigen::VectorXd phat;
    std::vector<bool> keptMask;
    double overlapLo = 0.0;
    double overlapHi = 1.0;

    Eigen::Index kept_count() const;
};

Eigen::MatrixXd propensity_design(const Sample& sample, const PropensityConfig& config,
                                  std::vector<std::string>* names = nullptr);

PropensityFit fit_logit(const Sample& sample, const PropensityConfig& config = {});

// Fitted probabilities for new instrument/covariate rows.
Eigen::VectorXd predict_propensity(const PropensityFit& fit, const Sample& rows, const PropensityConfig& config);

}  // namespace mtebounds
