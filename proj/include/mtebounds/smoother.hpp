#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "mtebounds/dgp.hpp"
#include "mtebounds/propensity.hpp"

namespace mtebounds {

enum class Kernel { Epanechnikov, Triangular, Uniform, Gaussian };

Kernel parse_kernel(const std::string& name);
double kernel_weight(Kernel kernel, double u);

// Silverman: 1.06 sd(P) n^(-1/5), a level-estimation rate.
// Derivative: Fan-Gijbels rule of thumb for the extracted derivative, with
// curvature and noise taken from a global polynomial pilot fit.
enum class BandwidthRule { Silverman, Derivative };

BandwidthRule parse_bandwidth_rule(const std::string& name);

struct SmootherConfig {
    Kernel kernel = Kernel::Epanechnikov;
    // Explicit bandwidth; unset selects `rule`.
    std::optional<double> bandwidth;
    BandwidthRule rule = BandwidthRule::Derivative;
    double bandwidthScale = 1.0;
    // Region of propensity values over which the derivative rule averages
    // the pilot curvature (the region where estimates are reported).
    double pilotLo = 0.1;
    double pilotHi = 0.9;
    int degree = 2;
    // Index of the extracted coefficient (1 = slope).
    int derivativeSelector = 1;

    void validate() const;
};

double rule_of_thumb_bandwidth(const Eigen::VectorXd& phat);

// Constant of the asymptotically optimal bandwidth for the derivative of
// order `selector` from a degree-`degree` fit, from the equivalent kernel.
double derivative_bandwidth_constant(Kernel kernel, int degree, int selector);

// Fan-Gijbels rule of thumb for one response: a global polynomial of degree
// degree+3 supplies the residual variance and the (degree+1)-th derivative.
double derivative_rot_bandwidth(const Eigen::VectorXd& phat, const Eigen::VectorXd& responses,
                                const SmootherConfig& config);

// Weighted least-squares local polynomial fit around p. Because the
// extracted coefficient is linear in the responses, the fit is stored as its
// equivalent-kernel weights and reused for any number of response vectors.
class LocalPolynomial {
public:
    LocalPolynomial(const Eigen::VectorXd& phat, double p, const SmootherConfig& config);

    double derivative(const Eigen::VectorXd& responses) const;
    double bandwidth() const { return h_; }
    double effective_n() const { return effectiveN_; }
    const std::vector<Eigen::Index>& rows() const { return rows_; }
    const std::vector<double>& weights() const { return weights_; }

private:
    double h_ = 0.0;
    double effectiveN_ = 0.0;
    std::vector<Eigen::Index> rows_;
    std::vector<double> weights_;
};

// sign * coefficient of (P - p) in the local fit of responses on phat.
double local_derivative(const Eigen::VectorXd& responses, const Eigen::VectorXd& phat, double p, int sign,
                        const SmootherConfig& config);

struct OutcomeGrid {
    Eigen::VectorXd edges;
    Eigen::VectorXd centers;

    static OutcomeGrid from_edges(const Eigen::VectorXd& edges);
    Eigen::Index bins() const { return centers.size(); }
    // Bin of y, bins being [e_{k-1}, e_k) with the last one closed; -1 if outside.
    Eigen::Index bin_of(double y) const;
};

// Edges at equally spaced sample quantiles (linear interpolation) of the
// selected outcomes; `count` = 11 gives deciles. Tied edges are merged.
OutcomeGrid quantile_grid(const Sample& sample, int count = 11);

struct ConditionalOutcomeTable {
    double p = 0.5;
    OutcomeGrid grid;
    double pi0 = 0.0;
    double pi1 = 0.0;
    Eigen::VectorXd gamma0, gamma1;  // raw local slopes per bin
    Eigen::VectorXd f0, f1;          // cleaned conditional masses
    Eigen::VectorXd F0, F1;          // running sums of f
    double rawMass0 = 0.0;           // sum of raw gammas before cleanup
    double rawMass1 = 0.0;
    double alphaHat = 0.0;
    bool estimable = false;
    bool boundary = false;
    double h0 = 0.0;  // bandwidths actually used (after scaling)
    double h1 = 0.0;
};

// Clamp negative gammas, renormalise, accumulate and form alphaHat. The
// table is estimable when both arms have positive slopes and bin mass.
void finalize_table(ConditionalOutcomeTable& table);

// Bandwidths (before bandwidthScale) for the untreated and treated arm of a
// table; every response of one arm shares its arm's bandwidth. The derivative
// rule is applied to each arm's selection response, S*(1-D) and S*D.
struct ArmBandwidths {
    double h0 = 0.0;
    double h1 = 0.0;
};
ArmBandwidths table_bandwidths(const Sample& sample, const PropensityFit& fit, const SmootherConfig& config);

// Pass precomputed bandwidths to avoid repeating the pilot fits when many
// evaluation points share one sample.
ConditionalOutcomeTable build_table(const Sample& sample, const PropensityFit& fit, double p,
                                    const OutcomeGrid& grid, const SmootherConfig& config,
                                    const std::optional<ArmBandwidths>& bandwidths = std::nullopt);

}  // namespace mtebounds
