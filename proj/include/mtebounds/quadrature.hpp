#pragma once

#include <functional>

namespace mtebounds {

struct QuadratureResult {
    double value = 0.0;
    double abserr = 0.0;
    int evaluations = 0;
};

struct QuadratureOptions {
    double absTol = 1e-12;
    double relTol = 1e-12;
    int maxIntervals = 2000;
};

using Integrand = std::function<double(double)>;

// Globally adaptive Gauss-Kronrod (7/15) integration. Either limit may be
// infinite; infinite ranges are mapped onto finite ones by t/(1-t)-type
// substitutions. Throws NumericalError when the requested tolerance is not
// reached, reporting the achieved error estimate.
QuadratureResult integrate(const Integrand& f, double a, double b, const QuadratureOptions& options = {});

// Root of a monotone increasing function g on [lo, hi] by bisection; the
// bracket is widened geometrically if it does not contain a sign change.
double bisect_increasing(const std::function<double(double)>& g, double lo, double hi, double tol = 1e-12,
                         int maxIter = 400);

}  // namespace mtebounds
