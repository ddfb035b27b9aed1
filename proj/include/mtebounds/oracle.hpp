#pragma once

#include <array>
#include <cstdint>

#include "mtebounds/dgp.hpp"
#include "mtebounds/tiers.hpp"

namespace mtebounds {

// Equal-weight two-component normal mixture with common standard deviation.
struct NormalMixture {
    std::array<double, 2> means{0.0, 0.0};
    double sd = 1.0;

    double cdf(double y) const;
    double pdf(double y) const;
    double mean() const;
    // Smallest y with cdf(y) >= u, found by bisection.
    double quantile(double u) const;
    // Mean over the lower (upper) tail holding probability `share`,
    // by quadrature of y dF over the tail.
    double tail_mean(double share, Tail tail) const;
    // Probability mass of the tail used by tail_mean, integrated numerically.
    double tail_mass(double share, Tail tail) const;
};

struct ClosedForms {
    double p = 0.5;
    double q = 0.0;        // standard normal quantile of p
    double m0 = 0.0;       // P[S0 = 1 | V = p]
    double m1 = 0.0;       // P[S1 = 1 | V = p]
    double pOO = 0.0;      // P[S0 = S1 = 1 | V = p]
    double alpha = 0.0;    // m0 / m1
    double vLower = 0.0;   // lower Frechet share max{m0 + m1 - 1, 0}
    double alphaFrechet = 0.0;
    double betaFrechet = 0.0;
    double mte = 0.0;
    NormalMixture outcome0;  // Y0* | S0 = 1, V = p
    NormalMixture outcome1;  // Y1* | S1 = 1, V = p
};

struct FrechetInterval {
    double p = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

struct TierBounds {
    double lower = 0.0;
    double upper = 0.0;
    BoundStatus status = BoundStatus::Partial;
};

struct OracleCurvePoint {
    double p = 0.5;
    double alpha = 0.0;
    double alphaFrechet = 0.0;
    double betaFrechet = 0.0;
    double vLower = 0.0;
    double mte = 0.0;
    double lb1 = 0.0, ub1 = 0.0;
    double lb2 = 0.0, ub2 = 0.0;
    double lb3 = 0.0, ub3 = 0.0;
    double xi0 = 0.0;
    double liv = 0.0;
    BoundStatus status1 = BoundStatus::Partial;
};

ClosedForms closed_forms(const DgpConfig& config, double p);
double true_mte(const DgpConfig& config, double p);
TierBounds true_bounds(const DgpConfig& config, double p, Tier tier);
FrechetInterval frechet_interval(double m0, double m1, double p = 0.0);
double liv_estimand(const DgpConfig& config, double p);
// Monotone-tier columns are NaN when delta1 < 0 (monotone selection fails).
OracleCurvePoint oracle_point(const DgpConfig& config, double p);

// Brute-force simulation of the conditional quantities at V = p, used to
// cross-check the closed forms. Standard errors are plain (delta-method for
// the ratios).
struct SimulatedPoint {
    double m0 = 0.0, m0Se = 0.0;
    double m1 = 0.0, m1Se = 0.0;
    double alpha = 0.0, alphaSe = 0.0;
    double xi0 = 0.0, xi0Se = 0.0;
};
SimulatedPoint simulate_point(const DgpConfig& config, double p, long draws, std::uint64_t seed);

}  // namespace mtebounds
