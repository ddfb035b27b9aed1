#include "mtebounds/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mtebounds/errors.hpp"
#include "mtebounds/normal.hpp"
#include "mtebounds/quadrature.hpp"

namespace mtebounds {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const QuadratureOptions kTailQuadrature{1e-13, 1e-11, 4000};

void check_p(double p)
{
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("oracle: p must lie strictly inside (0,1)");
}

}  // namespace

double NormalMixture::cdf(double y) const
{
    return 0.5 * (normal_cdf((y - means[0]) / sd) + normal_cdf((y - means[1]) / sd));
}

double NormalMixture::pdf(double y) const
{
    return 0.5 * (normal_pdf((y - means[0]) / sd) + normal_pdf((y - means[1]) / sd)) / sd;
}

double NormalMixture::mean() const
{
    return 0.5 * (means[0] + means[1]);
}

double NormalMixture::quantile(double u) const
{
    if (!(u > 0.0 && u < 1.0)) throw ConfigError("NormalMixture::quantile: u must lie in (0,1)");
    double lo = std::min(means[0], means[1]) - 10.0 * sd;
    double hi = std::max(means[0], means[1]) + 10.0 * sd;
    if (u < 0.5) return bisect_increasing([&](double y) { return cdf(y) - u; }, lo, hi, 1e-13);
    // Work with the survival function for upper quantiles to keep precision.
    double tailProb = 1.0 - u;
    auto survival = [&](double y) {
        return 0.5 * (normal_cdf((means[0] - y) / sd) + normal_cdf((means[1] - y) / sd));
    };
    return bisect_increasing([&](double y) { return tailProb - survival(y); }, lo, hi, 1e-13);
}

double NormalMixture::tail_mean(double share, Tail tail) const
{
    if (!(share > 0.0)) throw ConfigError("NormalMixture::tail_mean: share must be positive");
    if (!(sd > 0.0)) throw ConfigError("NormalMixture::tail_mean: requires a positive outcome noise sd");
    if (share >= 1.0) return mean();
    auto moment = [this](double y) { return y * pdf(y); };
    double value;
    if (tail == Tail::Lower) {
        double c = quantile(share);
        value = integrate(moment, -kInf, c, kTailQuadrature).value;
    } else {
        double c = quantile(1.0 - share);
        value = integrate(moment, c, kInf, kTailQuadrature).value;
    }
    return value / share;
}

double NormalMixture::tail_mass(double share, Tail tail) const
{
    if (share >= 1.0) return integrate([this](double y) { return pdf(y); }, -kInf, kInf, kTailQuadrature).value;
    auto density = [this](double y) { return pdf(y); };
    if (tail == Tail::Lower) return integrate(density, -kInf, quantile(share), kTailQuadrature).value;
    return integrate(density, quantile(1.0 - share), kInf, kTailQuadrature).value;
}

ClosedForms closed_forms(const DgpConfig& c, double p)
{
    check_p(p);
    c.validate();
    ClosedForms f;
    f.p = p;
    f.q = normal_quantile(p);
    const double a0 = c.delta0 * kSqrt2;
    const double a1 = (c.delta0 + c.delta1) * kSqrt2;
    f.m0 = normal_cdf(a0 - f.q);
    f.m1 = normal_cdf(a1 - f.q);
    f.pOO = normal_cdf(std::min(a0, a1) - f.q);
    f.alpha = f.m0 / f.m1;
    // m0 + m1 - 1 written as m0 - (1 - m1) to avoid cancellation.
    f.vLower = std::max(f.m0 - normal_cdf(f.q - a1), 0.0);
    f.alphaFrechet = f.vLower / f.m1;
    f.betaFrechet = f.vLower / f.m0;
    f.mte = true_mte(c, p);
    f.outcome0.means = {c.beta01 * f.q, -c.beta00 * f.q};
    f.outcome1.means = {c.beta11 * f.q, -c.beta10 * f.q};
    f.outcome0.sd = c.outcomeNoiseSd;
    f.outcome1.sd = c.outcomeNoiseSd;
    return f;
}

double true_mte(const DgpConfig& c, double p)
{
    check_p(p);
    return (c.beta11 - c.beta10 - c.beta01 + c.beta00) * normal_quantile(p) / 2.0;
}

TierBounds true_bounds(const DgpConfig& c, double p, Tier tier)
{
    ClosedForms f = closed_forms(c, p);
    if (!(c.outcomeNoiseSd > 0.0))
        throw ConfigError("true_bounds: the oracle requires outcomeNoiseSd > 0 (continuous outcomes)");
    const NormalMixture& y0 = f.outcome0;
    const NormalMixture& y1 = f.outcome1;
    TierBounds b;
    switch (tier) {
    case Tier::NoRestriction: {
        if (f.vLower <= 0.0) return {-kInf, kInf, BoundStatus::Lost};
        double a = std::min(f.alphaFrechet, 1.0);
        double be = std::min(f.betaFrechet, 1.0);
        b.lower = y1.tail_mean(a, Tail::Lower) - y0.tail_mean(be, Tail::Upper);
        b.upper = y1.tail_mean(a, Tail::Upper) - y0.tail_mean(be, Tail::Lower);
        b.status = (a >= 1.0 && be >= 1.0) ? BoundStatus::Identified : BoundStatus::Partial;
        return b;
    }
    case Tier::Monotone:
    case Tier::MonotonePlusDominance: {
        if (c.delta1 < 0.0)
            throw ConfigError("true_bounds: monotone selection tiers require delta1 >= 0");
        double a = std::min(f.alpha, 1.0);
        if (a <= 0.0) return {-kInf, kInf, BoundStatus::Lost};
        double xi0 = y0.mean();
        b.lower = tier == Tier::Monotone ? y1.tail_mean(a, Tail::Lower) - xi0 : y1.mean() - xi0;
        b.upper = y1.tail_mean(a, Tail::Upper) - xi0;
        b.status = a >= 1.0 ? BoundStatus::Identified : BoundStatus::Partial;
        return b;
    }
    case Tier::NoSelectionEffect: {
        double v = y1.mean() - y0.mean();
        return {v, v, BoundStatus::Identified};
    }
    }
    return b;
}

FrechetInterval frechet_interval(double m0, double m1, double p)
{
    if (!(m0 >= 0.0 && m0 <= 1.0 && m1 >= 0.0 && m1 <= 1.0))
        throw ConfigError("frechet_interval: marginals must lie in [0,1]");
    return {p, std::max(m0 + m1 - 1.0, 0.0), std::min(m0, m1)};
}

double liv_estimand(const DgpConfig& c, double p)
{
    ClosedForms f = closed_forms(c, p);
    const double a0 = c.delta0 * kSqrt2;
    const double a1 = (c.delta0 + c.delta1) * kSqrt2;
    const double c0 = (c.beta01 - c.beta00) / 2.0;
    const double c1 = (c.beta11 - c.beta10) / 2.0;
    const QuadratureOptions opt{1e-14, 1e-12, 4000};
    // Integrals over v are taken in t = quantile(v), so dv = phi(t) dt.
    double es = integrate([&](double t) { return normal_cdf(a1 - t) * normal_pdf(t); }, -kInf, f.q, opt).value +
                integrate([&](double t) { return normal_cdf(a0 - t) * normal_pdf(t); }, f.q, kInf, opt).value;
    if (es < 1e-12) throw NumericalError("liv_estimand: E[S|P=p] is numerically zero");
    double eys =
        integrate([&](double t) { return c1 * t * normal_cdf(a1 - t) * normal_pdf(t); }, -kInf, f.q, opt).value +
        integrate([&](double t) { return c0 * t * normal_cdf(a0 - t) * normal_pdf(t); }, f.q, kInf, opt).value;
    double dY = c1 * f.q * f.m1 - c0 * f.q * f.m0;
    return dY / es - eys * (f.m1 - f.m0) / (es * es);
}

OracleCurvePoint oracle_point(const DgpConfig& c, double p)
{
    ClosedForms f = closed_forms(c, p);
    OracleCurvePoint o;
    o.p = p;
    o.alpha = f.alpha;
    o.alphaFrechet = f.alphaFrechet;
    o.betaFrechet = f.betaFrechet;
    o.vLower = f.vLower;
    o.mte = f.mte;
    o.xi0 = f.outcome0.mean();
    TierBounds b1 = true_bounds(c, p, Tier::NoRestriction);
    o.lb1 = b1.lower;
    o.ub1 = b1.upper;
    o.status1 = b1.status;
    if (c.delta1 >= 0.0) {
        TierBounds b2 = true_bounds(c, p, Tier::Monotone);
        o.lb2 = b2.lower;
        o.ub2 = b2.upper;
        TierBounds b3 = true_bounds(c, p, Tier::MonotonePlusDominance);
        o.lb3 = b3.lower;
        o.ub3 = b3.upper;
    } else {
        o.lb2 = o.ub2 = o.lb3 = o.ub3 = std::numeric_limits<double>::quiet_NaN();
    }
    o.liv = liv_estimand(c, p);
    return o;
}

SimulatedPoint simulate_point(const DgpConfig& c, double p, long draws, std::uint64_t seed)
{
    check_p(p);
    if (draws < 2) throw ConfigError("simulate_point: need at least two draws");
    std::mt19937_64 engine(seed);
    auto normal = [&engine]() {
        double u = (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
        return normal_quantile(u);
    };
    const double theta = normal_quantile(p);
    long n0 = 0, n1 = 0, nOO = 0;
    double sumY = 0.0, sumY2 = 0.0;
    for (long i = 0; i < draws; ++i) {
        double epsS = normal();
        double xi = normal();
        double eta = normal();
        LatentDraw l = assemble(c, theta, epsS, 0.0, xi, eta);
        n0 += l.s0;
        n1 += l.s1;
        if (l.s0 == 1 && l.s1 == 1) {
            ++nOO;
            sumY += l.y0;
            sumY2 += l.y0 * l.y0;
        }
    }
    SimulatedPoint r;
    const double N = static_cast<double>(draws);
    r.m0 = n0 / N;
    r.m1 = n1 / N;
    r.m0Se = std::sqrt(r.m0 * (1.0 - r.m0) / N);
    r.m1Se = std::sqrt(r.m1 * (1.0 - r.m1) / N);
    if (n1 > 0) {
        r.alpha = static_cast<double>(nOO) / n1;
        r.alphaSe = std::sqrt(r.alpha * (1.0 - r.alpha) / n1);
    }
    if (nOO > 1) {
        r.xi0 = sumY / nOO;
        double var = (sumY2 - nOO * r.xi0 * r.xi0) / (nOO - 1);
        r.xi0Se = std::sqrt(std::max(var, 0.0) / nOO);
    }
    return r;
}

}  // namespace mtebounds
