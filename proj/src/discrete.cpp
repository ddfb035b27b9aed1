#include "mtebounds/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mtebounds/errors.hpp"
#include "mtebounds/normal.hpp"
#include "mtebounds/quadrature.hpp"

namespace mtebounds {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void merge_into(DiscreteLevel& a, const DiscreteLevel& b)
{
    double n = a.count + b.count;
    double wa = a.count / n, wb = b.count / n;
    a.p = wa * a.p + wb * b.p;
    a.eSD = wa * a.eSD + wb * b.eSD;
    a.eSU = wa * a.eSU + wb * b.eSU;
    a.q1 = wa * a.q1 + wb * b.q1;
    a.q0 = wa * a.q0 + wb * b.q0;
    a.count = n;
    a.zValues.insert(a.zValues.end(), b.zValues.begin(), b.zValues.end());
}

}  // namespace

DiscreteLadder build_ladder(const Sample& sample, const OutcomeGrid& grid, int zColumn)
{
    if (zColumn < 0 || zColumn >= sample.z.cols()) throw ConfigError("build_ladder: instrument column out of range");
    const Eigen::Index K = grid.bins();
    std::map<double, DiscreteLevel> cells;
    for (Eigen::Index i = 0; i < sample.size(); ++i) {
        double z = sample.z(i, zColumn);
        auto [it, inserted] = cells.try_emplace(z);
        DiscreteLevel& c = it->second;
        if (inserted) {
            c.zValues = {z};
            c.q1 = Eigen::VectorXd::Zero(K);
            c.q0 = Eigen::VectorXd::Zero(K);
        }
        c.count += 1.0;
        c.p += sample.d(i);
        if (sample.s(i) == 1.0) {
            bool treated = sample.d(i) == 1.0;
            (treated ? c.eSD : c.eSU) += 1.0;
            Eigen::Index k = grid.bin_of(sample.y(i));
            if (k >= 0) (treated ? c.q1 : c.q0)(k) += 1.0;
        }
    }
    if (cells.size() > 1000) throw ConfigError("build_ladder: instrument has more than 1000 distinct values");
    std::vector<DiscreteLevel> levels;
    for (auto& [z, c] : cells) {
        c.p /= c.count;
        c.eSD /= c.count;
        c.eSU /= c.count;
        c.q1 /= c.count;
        c.q0 /= c.count;
        if (c.p <= 0.0 || c.p >= 1.0)
            throw ConfigError("build_ladder: instrument value " + std::to_string(z) +
                              " has propensity " + std::to_string(c.p) + "; propensities must lie in (0,1)");
        levels.push_back(c);
    }
    std::stable_sort(levels.begin(), levels.end(),
                     [](const DiscreteLevel& a, const DiscreteLevel& b) { return a.p < b.p; });
    DiscreteLadder ladder;
    ladder.grid = grid;
    for (const DiscreteLevel& c : levels) {
        if (!ladder.levels.empty() && std::abs(c.p - ladder.levels.back().p) <= 1e-12)
            merge_into(ladder.levels.back(), c);
        else
            ladder.levels.push_back(c);
    }
    return ladder;
}

LateBound late_bounds(const DiscreteLadder& ladder, int ell, TrimMode mode)
{
    const int L = static_cast<int>(ladder.levels.size());
    if (ell < 2 || ell > L) throw ConfigError("late_bounds: interval index must lie in 2.." + std::to_string(L));
    const DiscreteLevel& lo = ladder.levels[static_cast<std::size_t>(ell - 2)];
    const DiscreteLevel& hi = ladder.levels[static_cast<std::size_t>(ell - 1)];
    LateBound out;
    out.ell = ell;
    out.pLo = lo.p;
    out.pHi = hi.p;
    const double dp = hi.p - lo.p;
    const double m1 = (hi.eSD - lo.eSD) / dp;
    const double m0 = (lo.eSU - hi.eSU) / dp;
    if (!(m1 > 0.0) || m0 < 0.0) {
        out.violation = true;
        out.status = BoundStatus::NonEstimable;
        out.lower = out.upper = out.xi0 = out.alphaTilde = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    out.alphaTilde = std::clamp(m0 / m1, 0.0, 1.0);
    if (m0 == 0.0) {
        out.lower = -kInf;
        out.upper = kInf;
        out.xi0 = std::numeric_limits<double>::quiet_NaN();
        out.status = BoundStatus::Lost;
        return out;
    }
    ConditionalOutcomeTable t;
    t.p = hi.p;
    t.grid = ladder.grid;
    t.pi1 = m1;
    t.pi0 = m0;
    t.gamma1 = (hi.q1 - lo.q1) / dp;
    t.gamma0 = (lo.q0 - hi.q0) / dp;
    finalize_table(t);
    BoundPoint b = bounds_at(t, Tier::Monotone, mode);
    out.lower = b.lower;
    out.upper = b.upper;
    out.xi0 = b.xi0;
    out.status = b.status;
    return out;
}

std::vector<LateBound> all_late_bounds(const DiscreteLadder& ladder, TrimMode mode)
{
    std::vector<LateBound> out;
    for (int ell = 2; ell <= static_cast<int>(ladder.levels.size()); ++ell) out.push_back(late_bounds(ladder, ell, mode));
    return out;
}

DiscreteLadder population_ladder(const DgpConfig& c, int cells, const OutcomeGrid& grid)
{
    c.validate();
    if (cells < 2) throw ConfigError("population_ladder: need at least two cells");
    if (!(c.outcomeNoiseSd > 0.0)) throw ConfigError("population_ladder: requires outcomeNoiseSd > 0");
    const double a0 = c.delta0 * kSqrt2;
    const double a1 = (c.delta0 + c.delta1) * kSqrt2;
    const double sd = c.outcomeNoiseSd;
    const QuadratureOptions opt{1e-13, 1e-10, 4000};
    const Eigen::Index E = grid.edges.size();
    const double K = cells;

    // Within cell j the propensity is uniform on [a, b]. For arm 1,
    // E[g(V) 1{V <= P} | cell] = K * int_0^b g(v) (b - max(v, a)) dv; for
    // arm 0, E[g(V) 1{V > P} | cell] = K * int_a^1 g(v) (min(v, b) - a) dv.
    // Integrals over v use v = Phi(t).
    auto arm_integral = [&](int arm, const std::function<double(double)>& g, double a, double b) {
        double ta = a > 0.0 ? normal_quantile(a) : -kInf;
        double tb = b < 1.0 ? normal_quantile(b) : kInf;
        auto weight = [&](double t) {
            double v = normal_cdf(t);
            return arm == 1 ? b - std::max(v, a) : std::min(v, b) - a;
        };
        auto f = [&](double t) { return g(t) * normal_pdf(t) * weight(t); };
        double s = 0.0;
        if (arm == 1) {
            if (ta > -kInf) s += integrate(f, -kInf, ta, opt).value;
            s += integrate(f, ta, tb, opt).value;
        } else {
            s += integrate(f, ta, tb, opt).value;
            if (tb < kInf) s += integrate(f, tb, kInf, opt).value;
        }
        return K * s;
    };

    DiscreteLadder ladder;
    ladder.grid = grid;
    for (int j = 1; j <= cells; ++j) {
        const double a = (j - 1) / K;
        const double b = j / K;
        DiscreteLevel lv;
        lv.zValues = {static_cast<double>(j)};
        lv.count = 1.0;
        lv.p = (j - 0.5) / K;
        auto sel1 = [&](double t) { return normal_cdf(a1 - t); };
        auto sel0 = [&](double t) { return normal_cdf(a0 - t); };
        lv.eSD = arm_integral(1, sel1, a, b);
        lv.eSU = arm_integral(0, sel0, a, b);
        Eigen::VectorXd H1(E), H0(E);
        for (Eigen::Index e = 0; e < E; ++e) {
            const double y = grid.edges(e);
            auto cdf1 = [&](double t) {
                return normal_cdf(a1 - t) * 0.5 *
                       (normal_cdf((y - c.beta11 * t) / sd) + normal_cdf((y + c.beta10 * t) / sd));
            };
            auto cdf0 = [&](double t) {
                return normal_cdf(a0 - t) * 0.5 *
                       (normal_cdf((y - c.beta01 * t) / sd) + normal_cdf((y + c.beta00 * t) / sd));
            };
            H1(e) = arm_integral(1, cdf1, a, b);
            H0(e) = arm_integral(0, cdf0, a, b);
        }
        lv.q1 = H1.tail(E - 1) - H1.head(E - 1);
        lv.q0 = H0.tail(E - 1) - H0.head(E - 1);
        ladder.levels.push_back(lv);
    }
    return ladder;
}

}  // namespace mtebounds
