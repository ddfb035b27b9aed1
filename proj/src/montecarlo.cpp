#include "mtebounds/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "mtebounds/errors.hpp"
#include "mtebounds/oracle.hpp"

namespace mtebounds {

namespace {

constexpr Estimand kAll[] = {Estimand::Alpha, Estimand::Xi0, Estimand::LB, Estimand::UB, Estimand::Lower, Estimand::Upper};

double pairwise_range(const double* v, std::size_t n)
{
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    std::size_t h = n / 2;
    return pairwise_range(v, h) + pairwise_range(v + h, n - h);
}

struct Replication {
    std::vector<double> values;  // estimand-major, NaN when unavailable
    bool failed = false;
    std::string error;
};

}  // namespace

void McConfig::validate() const
{
    panel.validate();
    if (reps < 1) throw ConfigError("montecarlo: reps must be at least 1");
    if (n < 100) throw ConfigError("montecarlo: n must be at least 100");
    if (gridPoints < 2) throw ConfigError("montecarlo: grid needs at least two points");
    if (pPoints.empty()) throw ConfigError("montecarlo: no evaluation points");
    for (double p : pPoints)
        if (!(p > 0.0 && p < 1.0)) throw ConfigError("montecarlo: evaluation points must lie in (0,1)");
    smoother.validate();
}

std::string to_string(Estimand e)
{
    switch (e) {
    case Estimand::Alpha: return "alpha";
    case Estimand::Xi0: return "xi0";
    case Estimand::LB: return "lb1";
    case Estimand::UB: return "ub1";
    case Estimand::Lower: return "lower";
    case Estimand::Upper: return "upper";
    }
    return "?";
}

const McCell& McReport::cell(Estimand e, double p) const
{
    for (const auto& c : cells)
        if (c.estimand == e && std::abs(c.p - p) < 1e-12) return c;
    throw ConfigError("montecarlo: no cell for " + to_string(e) + " at p = " + std::to_string(p));
}

double mc_truth(const DgpConfig& config, Estimand e, double p)
{
    ClosedForms cf = closed_forms(config, p);
    const double alpha = std::min(cf.alpha, 1.0);
    switch (e) {
    case Estimand::Alpha: return alpha;
    case Estimand::Xi0: return cf.outcome0.mean();
    case Estimand::LB: return cf.outcome1.tail_mean(alpha, Tail::Lower);
    case Estimand::UB: return cf.outcome1.tail_mean(alpha, Tail::Upper);
    case Estimand::Lower: return true_bounds(config, p, Tier::Monotone).lower;
    case Estimand::Upper: return true_bounds(config, p, Tier::Monotone).upper;
    }
    return 0.0;
}

double pairwise_sum(const std::vector<double>& values)
{
    return pairwise_range(values.data(), values.size());
}

McReport run_mc(const McConfig& config)
{
    config.validate();
    const std::size_t P = config.pPoints.size();
    const std::size_t R = static_cast<std::size_t>(config.reps);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    std::vector<Replication> results(R);
    auto replicate = [&](std::size_t r) {
        Replication& out = results[r];
        out.values.assign(kNumEstimands * P, nan);
        try {
            Sample s = generate(config.panel, config.n, config.seedBase + r);
            PropensityFit fit = fit_logit(s, config.propensity);
            OutcomeGrid grid = quantile_grid(s, config.gridPoints);
            ArmBandwidths hb = table_bandwidths(s, fit, config.smoother);
            for (std::size_t j = 0; j < P; ++j) {
                try {
                    ConditionalOutcomeTable t = build_table(s, fit, config.pPoints[j], grid, config.smoother, hb);
                    BoundPoint b = bounds_at(t, Tier::Monotone, config.trim);
                    out.values[0 * P + j] = t.alphaHat;
                    if (!b.finite()) continue;
                    out.values[1 * P + j] = b.xi0;
                    out.values[2 * P + j] = b.lower + b.xi0;
                    out.values[3 * P + j] = b.upper + b.xi0;
                    out.values[4 * P + j] = b.lower;
                    out.values[5 * P + j] = b.upper;
                } catch (const InsufficientDataError&) {
                } catch (const NumericalError&) {
                }
            }
        } catch (const std::exception& e) {
            out.failed = true;
            out.error = "replication " + std::to_string(r) + ": " + e.what();
        }
    };

    int threads = config.threads > 0 ? config.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min<int>(threads, config.reps);
    if (threads <= 1) {
        for (std::size_t r = 0; r < R; ++r) replicate(r);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < R; r = next++) replicate(r);
            });
        for (auto& th : pool) th.join();
    }

    McReport report;
    report.config = config;
    for (const auto& rep : results)
        if (rep.failed) {
            ++report.failedReplications;
            report.failureLog.push_back(rep.error);
        }
    const double n = static_cast<double>(config.n);
    for (int ei = 0; ei < kNumEstimands; ++ei) {
        Estimand e = kAll[ei];
        for (std::size_t j = 0; j < P; ++j) {
            McCell c;
            c.estimand = e;
            c.p = config.pPoints[j];
            c.truth = mc_truth(config.panel, e, c.p);
            std::vector<double> err;
            for (const auto& rep : results) {
                double v = rep.values[static_cast<std::size_t>(ei) * P + j];
                if (std::isfinite(v))
                    err.push_back(v - c.truth);
                else
                    ++c.failures;
            }
            c.used = static_cast<int>(err.size());
            if (c.used == 0) {
                c.bias = c.sd = c.scaledMse = nan;
            } else {
                const double m = static_cast<double>(c.used);
                c.bias = pairwise_sum(err) / m;
                std::vector<double> sq(err.size()), dev(err.size());
                for (std::size_t i = 0; i < err.size(); ++i) {
                    sq[i] = n * err[i] * err[i];
                    dev[i] = (err[i] - c.bias) * (err[i] - c.bias);
                }
                c.scaledMse = pairwise_sum(sq) / m;
                c.sd = c.used > 1 ? std::sqrt(pairwise_sum(dev) / (m - 1.0)) : 0.0;
            }
            report.cells.push_back(c);
        }
    }
    for (std::size_t j = 0; j < P; ++j) {
        const double mte = true_mte(config.panel, config.pPoints[j]);
        int used = 0, hit = 0;
        for (const auto& rep : results) {
            double lo = rep.values[4 * P + j], hi = rep.values[5 * P + j];
            if (!std::isfinite(lo) || !std::isfinite(hi)) continue;
            ++used;
            hit += lo <= mte && mte <= hi;
        }
        report.coverage.push_back(used > 0 ? static_cast<double>(hit) / used : nan);
    }
    return report;
}

}  // namespace mtebounds
