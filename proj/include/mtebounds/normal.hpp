#pragma once

namespace mtebounds {

constexpr double kSqrt2 = 1.41421356237309504880;

double normal_pdf(double x);
double normal_cdf(double x);
// Inverse standard normal CDF; rational approximation polished by a Halley step.
double normal_quantile(double p);

double logistic(double x);
// Derivative of the logistic CDF.
double logistic_pdf(double x);

}  // namespace mtebounds
