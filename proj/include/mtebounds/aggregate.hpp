#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "mtebounds/npbounds.hpp"

namespace mtebounds {

enum class WeightKind { ATE, ATT, ATU, LATE, PRTE };

std::string to_string(WeightKind kind);
WeightKind parse_weight_kind(const std::string& name);

// Propensity CDFs under a baseline policy a and an alternative a',
// tabulated on a common grid.
struct PolicyPair {
    Eigen::VectorXd grid;
    Eigen::VectorXd cdfA;
    Eigen::VectorXd cdfAPrime;

    void validate() const;
};

struct WeightSpec {
    WeightKind kind = WeightKind::ATE;
    double lateLo = 0.0;
    double lateHi = 1.0;
    std::optional<PolicyPair> policy;

    static WeightSpec late(double lo, double hi);
    static WeightSpec prte(PolicyPair policy);
    void validate() const;
};

// Weight values on an evaluation grid together with the integration domain
// [lo, hi]; the weight is zero outside the domain.
struct WeightCurve {
    WeightKind kind = WeightKind::ATE;
    Eigen::VectorXd p;
    Eigen::VectorXd omega;
    double lo = 0.0;
    double hi = 1.0;

    double at(double x) const;
};

struct AggregateBound {
    WeightKind kind = WeightKind::ATE;
    double lower = 0.0;
    double upper = 0.0;
    double weightIntegral = 0.0;
    double lostMass = 0.0;
    BoundStatus status = BoundStatus::Partial;
};

// Exact integral over [lo, hi] of the piecewise-linear interpolant of
// (x, y); x must be increasing and cover [lo, hi].
double trapezoid(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double lo, double hi);
double trapezoid(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Linear interpolation of tabulated (x, y) at t, constant beyond the ends.
double interpolate(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double t);

// Weight of the requested kind from pi0 and the propensity density, both
// tabulated on `grid`, normalised to integrate to one on its domain.
WeightCurve weight_curve(const WeightSpec& spec, const Eigen::VectorXd& grid, const Eigen::VectorXd& pi0,
                         const Eigen::VectorXd& fP);

// Aggregates a bound curve evaluated on the weight's grid. Negative weight
// (possible for PRTE when policy CDFs cross) swaps the roles of the bounds.
// Weight mass on non-finite points makes the aggregate lost.
AggregateBound aggregate_bounds(const BoundCurve& curve, const WeightCurve& weight);

// Kernel density of fitted propensities on `grid` (Gaussian kernel,
// Silverman bandwidth, reflected at 0 and 1).
Eigen::VectorXd propensity_density(const Eigen::VectorXd& phat, const Eigen::VectorXd& grid);

}  // namespace mtebounds
