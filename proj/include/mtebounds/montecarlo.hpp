#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtebounds/dgp.hpp"
#include "mtebounds/npbounds.hpp"
#include "mtebounds/propensity.hpp"
#include "mtebounds/smoother.hpp"

namespace mtebounds {

struct McConfig {
    DgpConfig panel = panel_a();
    long n = 10000;
    int reps = 200;
    std::uint64_t seedBase = 20240101;
    std::vector<double> pPoints{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    int gridPoints = 11;  // sample percentiles 0, 0.1, ..., 1
    PropensityConfig propensity;
    SmootherConfig smoother;
    TrimMode trim = TrimMode::Verbatim;
    int threads = 0;  // 0 = hardware concurrency

    void validate() const;
};

enum class Estimand { Alpha, Xi0, LB, UB, Lower, Upper };
inline constexpr int kNumEstimands = 6;
std::string to_string(Estimand e);

struct McCell {
    Estimand estimand = Estimand::Alpha;
    double p = 0.5;
    double truth = 0.0;
    double bias = 0.0;       // mean of estimate - truth
    double sd = 0.0;         // sample standard deviation of the estimate
    double scaledMse = 0.0;  // mean of n * (estimate - truth)^2
    int used = 0;
    int failures = 0;
};

struct McReport {
    McConfig config;
    std::vector<McCell> cells;      // estimand-major, then p
    std::vector<double> coverage;   // share of usable replications whose bounds contain the true MTE, per p
    int failedReplications = 0;
    std::vector<std::string> failureLog;

    const McCell& cell(Estimand e, double p) const;
};

// Truth of each estimand at p under the panel.
double mc_truth(const DgpConfig& config, Estimand e, double p);

// Sum with pairwise (cascade) reduction.
double pairwise_sum(const std::vector<double>& values);

McReport run_mc(const McConfig& config);

}  // namespace mtebounds
