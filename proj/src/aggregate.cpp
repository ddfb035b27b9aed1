#include "mtebounds/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtebounds/errors.hpp"
#include "mtebounds/normal.hpp"

namespace mtebounds {

namespace {

void check_grid(const Eigen::VectorXd& x)
{
    if (x.size() < 2) throw ConfigError("evaluation grid needs at least two points");
    for (Eigen::Index i = 1; i < x.size(); ++i)
        if (!(x(i) > x(i - 1))) throw ConfigError("evaluation grid must be strictly increasing");
}

}  // namespace

std::string to_string(WeightKind kind)
{
    switch (kind) {
    case WeightKind::ATE: return "ATE";
    case WeightKind::ATT: return "ATT";
    case WeightKind::ATU: return "ATU";
    case WeightKind::LATE: return "LATE";
    case WeightKind::PRTE: return "PRTE";
    }
    return "unknown";
}

WeightKind parse_weight_kind(const std::string& name)
{
    std::string u = name;
    std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (u == "ATE") return WeightKind::ATE;
    if (u == "ATT") return WeightKind::ATT;
    if (u == "ATU") return WeightKind::ATU;
    if (u == "LATE") return WeightKind::LATE;
    if (u == "PRTE") return WeightKind::PRTE;
    throw ConfigError("unknown weight kind '" + name + "' (expected ATE, ATT, ATU, LATE or PRTE)");
}

void PolicyPair::validate() const
{
    check_grid(grid);
    if (cdfA.size() != grid.size() || cdfAPrime.size() != grid.size())
        throw ConfigError("policy CDFs must be tabulated on the policy grid");
    for (const Eigen::VectorXd* c : {&cdfA, &cdfAPrime}) {
        for (Eigen::Index i = 0; i < c->size(); ++i) {
            if ((*c)(i) < 0.0 || (*c)(i) > 1.0) throw ConfigError("policy CDF values must lie in [0,1]");
            if (i > 0 && (*c)(i) < (*c)(i - 1)) throw ConfigError("policy CDFs must be nondecreasing");
        }
    }
}

WeightSpec WeightSpec::late(double lo, double hi)
{
    WeightSpec s;
    s.kind = WeightKind::LATE;
    s.lateLo = lo;
    s.lateHi = hi;
    return s;
}

WeightSpec WeightSpec::prte(PolicyPair policy)
{
    WeightSpec s;
    s.kind = WeightKind::PRTE;
    s.policy = std::move(policy);
    return s;
}

void WeightSpec::validate() const
{
    if (kind == WeightKind::LATE && !(lateLo >= 0.0 && lateLo < lateHi && lateHi <= 1.0))
        throw ConfigError("LATE weight requires 0 <= lower < upper <= 1");
    if (kind == WeightKind::PRTE) {
        if (!policy) throw ConfigError("PRTE weight requires a policy pair");
        policy->validate();
    }
}

double WeightCurve::at(double x) const
{
    if (x < lo || x > hi) return 0.0;
    return interpolate(p, omega, x);
}

double interpolate(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double t)
{
    const Eigen::Index n = x.size();
    if (t <= x(0)) return y(0);
    if (t >= x(n - 1)) return y(n - 1);
    const double* it = std::upper_bound(x.data(), x.data() + n, t);
    Eigen::Index j = it - x.data();
    double w = (t - x(j - 1)) / (x(j) - x(j - 1));
    return y(j - 1) + w * (y(j) - y(j - 1));
}

double trapezoid(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double lo, double hi)
{
    if (x.size() != y.size()) throw ConfigError("trapezoid: length mismatch");
    const Eigen::Index n = x.size();
    if (lo < x(0) - 1e-12 || hi > x(n - 1) + 1e-12) throw ConfigError("trapezoid: domain exceeds the grid");
    double sum = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        double a = std::max(x(i), lo);
        double b = std::min(x(i + 1), hi);
        if (!(b > a)) continue;
        double ya = interpolate(x, y, a);
        double yb = interpolate(x, y, b);
        if (a == x(i)) ya = y(i);
        if (b == x(i + 1)) yb = y(i + 1);
        sum += 0.5 * (ya + yb) * (b - a);
    }
    return sum;
}

double trapezoid(const Eigen::VectorXd& x, const Eigen::VectorXd& y)
{
    return trapezoid(x, y, x(0), x(x.size() - 1));
}

WeightCurve weight_curve(const WeightSpec& spec, const Eigen::VectorXd& grid, const Eigen::VectorXd& pi0,
                         const Eigen::VectorXd& fP)
{
    spec.validate();
    check_grid(grid);
    const Eigen::Index n = grid.size();
    if (pi0.size() != n || fP.size() != n) throw ConfigError("weight_curve: inputs must share the grid");
    for (Eigen::Index i = 0; i < n; ++i)
        if (pi0(i) < 0.0) throw ConfigError("weight_curve: pi0 must be nonnegative");

    WeightCurve w;
    w.kind = spec.kind;
    w.p = grid;
    w.lo = grid(0);
    w.hi = grid(n - 1);
    Eigen::VectorXd raw(n);
    switch (spec.kind) {
    case WeightKind::ATE:
        raw = pi0;
        break;
    case WeightKind::ATT:
        for (Eigen::Index i = 0; i < n; ++i) raw(i) = trapezoid(grid, fP, grid(i), w.hi) * pi0(i);
        break;
    case WeightKind::ATU:
        for (Eigen::Index i = 0; i < n; ++i) raw(i) = trapezoid(grid, fP, w.lo, grid(i)) * pi0(i);
        break;
    case WeightKind::LATE:
        w.lo = std::max(w.lo, spec.lateLo);
        w.hi = std::min(w.hi, spec.lateHi);
        if (!(w.hi > w.lo)) throw ConfigError("LATE interval does not meet the evaluation grid");
        raw = pi0;
        break;
    case WeightKind::PRTE:
        for (Eigen::Index i = 0; i < n; ++i)
            raw(i) = (interpolate(spec.policy->grid, spec.policy->cdfAPrime, grid(i)) -
                      interpolate(spec.policy->grid, spec.policy->cdfA, grid(i))) *
                     pi0(i);
        break;
    }
    double norm = trapezoid(grid, raw, w.lo, w.hi);
    if (!(std::abs(norm) > 1e-300) || !std::isfinite(norm))
        throw ConfigError("weight_curve: normalizer is zero; the " + to_string(spec.kind) + " parameter is undefined");
    w.omega = raw / norm;
    for (Eigen::Index i = 0; i < n; ++i)
        if (grid(i) < w.lo || grid(i) > w.hi) w.omega(i) = 0.0;
    return w;
}

AggregateBound aggregate_bounds(const BoundCurve& curve, const WeightCurve& weight)
{
    const Eigen::Index n = weight.p.size();
    if (static_cast<Eigen::Index>(curve.size()) != n)
        throw ConfigError("aggregate_bounds: curve and weight must share the evaluation grid");
    AggregateBound out;
    out.kind = weight.kind;
    Eigen::VectorXd lo(n), hi(n), lost(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const BoundPoint& b = curve[static_cast<std::size_t>(i)];
        if (std::abs(b.p - weight.p(i)) > 1e-9) throw ConfigError("aggregate_bounds: grid mismatch");
        // Weights at the domain ends come from the interior interpolant.
        w(i) = (weight.p(i) < weight.lo || weight.p(i) > weight.hi) ? 0.0 : weight.omega(i);
        double pos = std::max(w(i), 0.0);
        double neg = std::max(-w(i), 0.0);
        if (b.finite()) {
            lo(i) = pos * b.lower - neg * b.upper;
            hi(i) = pos * b.upper - neg * b.lower;
            lost(i) = 0.0;
        } else {
            lo(i) = hi(i) = 0.0;
            lost(i) = std::abs(w(i));
        }
    }
    out.weightIntegral = trapezoid(weight.p, weight.omega, weight.lo, weight.hi);
    out.lostMass = trapezoid(weight.p, lost, weight.lo, weight.hi);
    if (out.lostMass > 0.0) {
        out.lower = -std::numeric_limits<double>::infinity();
        out.upper = std::numeric_limits<double>::infinity();
        out.status = BoundStatus::Lost;
        return out;
    }
    out.lower = trapezoid(weight.p, lo, weight.lo, weight.hi);
    out.upper = trapezoid(weight.p, hi, weight.lo, weight.hi);
    out.status = out.lower == out.upper ? BoundStatus::Identified : BoundStatus::Partial;
    return out;
}

Eigen::VectorXd propensity_density(const Eigen::VectorXd& phat, const Eigen::VectorXd& grid)
{
    const double n = static_cast<double>(phat.size());
    if (n < 2) throw InsufficientDataError("propensity_density needs at least two values", n);
    double mean = phat.mean();
    double sd = std::sqrt((phat.array() - mean).square().sum() / (n - 1.0));
    double h = 1.06 * std::max(sd, 1e-6) * std::pow(n, -0.2);
    Eigen::VectorXd out(grid.size());
    for (Eigen::Index g = 0; g < grid.size(); ++g) {
        double x = grid(g);
        double s = 0.0;
        for (Eigen::Index i = 0; i < phat.size(); ++i) {
            double v = phat(i);
            s += normal_pdf((x - v) / h) + normal_pdf((x + v) / h) + normal_pdf((x - (2.0 - v)) / h);
        }
        out(g) = (x >= 0.0 && x <= 1.0) ? s / (n * h) : 0.0;
    }
    return out;
}

}  // namespace mtebounds
