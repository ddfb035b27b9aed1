#pragma once

#include <optional>
#include <vector>

#include "mtebounds/smoother.hpp"
#include "mtebounds/tiers.hpp"

namespace mtebounds {

// Verbatim keeps whole bins whose running mass passes the indicator of the
// trimming formula; Fractional also takes the proportional part of the bin
// straddling the trim point.
enum class TrimMode { Verbatim, Fractional };

// Running masses within this distance of the share count as ties.
constexpr double kTieTolerance = 1e-12;

// Tail mean of arm d's binned distribution with trim share `share`.
// share = 0 yields -inf (lower) / +inf (upper).
double trimmed_mean(const ConditionalOutcomeTable& table, int arm, double share, Tail tail,
                    TrimMode mode = TrimMode::Verbatim);

// Untrimmed binned mean of arm d.
double binned_mean(const ConditionalOutcomeTable& table, int arm);

struct BoundPoint {
    double p = 0.5;
    Tier tier = Tier::Monotone;
    double lower = 0.0;
    double upper = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double vLower = 0.0;
    double xi0 = 0.0;
    BoundStatus status = BoundStatus::Partial;

    bool finite() const;
};

using BoundCurve = std::vector<BoundPoint>;

BoundPoint bounds_at(const ConditionalOutcomeTable& table, Tier tier, TrimMode mode = TrimMode::Verbatim);

// Treatment effect on the probability of being observed.
double selection_mte(const Sample& sample, const PropensityFit& fit, double p, const SmootherConfig& config);

// Ratio-of-derivatives MTE of the observed outcome. Interpretable as the
// unconditional MTE only when selection is independent of the potential
// outcomes given V. Empty when a denominator is numerically zero.
std::optional<double> unconditional_mte(const Sample& sample, const PropensityFit& fit, double p,
                                        const SmootherConfig& config);

// Slope of E[Y | P = p, S = 1]. Not an interpretable treatment effect: it
// mixes the intensive and extensive margins.
double liv_naive(const Sample& sample, const PropensityFit& fit, double p, const SmootherConfig& config);

}  // namespace mtebounds
