#include "mtebounds/npbounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtebounds/errors.hpp"

namespace mtebounds {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct KeptData {
    Eigen::VectorXd phat, y, s, d;
};

KeptData kept_data(const Sample& sample, const PropensityFit& fit, bool selectedOnly = false)
{
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < sample.size(); ++i)
        if (fit.keptMask[static_cast<std::size_t>(i)] && (!selectedOnly || sample.s(i) == 1.0)) idx.push_back(i);
    KeptData k;
    const auto m = static_cast<Eigen::Index>(idx.size());
    k.phat.resize(m);
    k.y.resize(m);
    k.s.resize(m);
    k.d.resize(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        Eigen::Index i = idx[static_cast<std::size_t>(r)];
        k.phat(r) = fit.phat(i);
        k.y(r) = sample.y(i);
        k.s(r) = sample.s(i);
        k.d(r) = sample.d(i);
    }
    return k;
}

}  // namespace

double trimmed_mean(const ConditionalOutcomeTable& table, int arm, double share, Tail tail, TrimMode mode)
{
    if (arm != 0 && arm != 1) throw ConfigError("trimmed_mean: arm must be 0 or 1");
    if (!(share >= 0.0 && share <= 1.0 + kTieTolerance)) throw ConfigError("trimmed_mean: share must lie in [0,1]");
    if (share <= 0.0) return tail == Tail::Lower ? -kInf : kInf;
    const Eigen::VectorXd& f = arm == 1 ? table.f1 : table.f0;
    const Eigen::VectorXd& F = arm == 1 ? table.F1 : table.F0;
    const Eigen::VectorXd& y = table.grid.centers;
    double sum = 0.0;
    for (Eigen::Index k = 0; k < f.size(); ++k) {
        double mass;
        if (mode == TrimMode::Verbatim) {
            bool in = tail == Tail::Lower ? F(k) <= share + kTieTolerance : 1.0 - F(k) < share - kTieTolerance;
            mass = in ? f(k) : 0.0;
        } else {
            double before = k > 0 ? F(k - 1) : 0.0;
            double room = tail == Tail::Lower ? share - before : share - (1.0 - F(k));
            mass = std::clamp(room, 0.0, f(k));
        }
        sum += y(k) * mass;
    }
    return sum / share;
}

double binned_mean(const ConditionalOutcomeTable& table, int arm)
{
    const Eigen::VectorXd& f = arm == 1 ? table.f1 : table.f0;
    return table.grid.centers.dot(f);
}

bool BoundPoint::finite() const
{
    return std::isfinite(lower) && std::isfinite(upper);
}

BoundPoint bounds_at(const ConditionalOutcomeTable& table, Tier tier, TrimMode mode)
{
    BoundPoint b;
    b.p = table.p;
    b.tier = tier;
    b.alpha = table.alphaHat;
    b.beta = 1.0;
    if (!table.estimable) {
        b.lower = b.upper = b.xi0 = kNaN;
        b.status = BoundStatus::NonEstimable;
        return b;
    }
    b.xi0 = binned_mean(table, 0);
    const double mean1 = binned_mean(table, 1);
    switch (tier) {
    case Tier::NoSelectionEffect:
        b.lower = b.upper = mean1 - b.xi0;
        b.status = BoundStatus::Identified;
        break;
    case Tier::Monotone:
    case Tier::MonotonePlusDominance: {
        const double a = table.alphaHat;
        if (a <= 0.0) {
            b.lower = -kInf;
            b.upper = kInf;
            b.status = BoundStatus::Lost;
            break;
        }
        b.lower = tier == Tier::Monotone ? trimmed_mean(table, 1, a, Tail::Lower, mode) - b.xi0 : mean1 - b.xi0;
        b.upper = trimmed_mean(table, 1, a, Tail::Upper, mode) - b.xi0;
        b.status = a >= 1.0 ? BoundStatus::Identified : BoundStatus::Partial;
        break;
    }
    case Tier::NoRestriction: {
        const double m0 = std::clamp(table.pi0, 0.0, 1.0);
        const double m1 = std::clamp(table.pi1, 0.0, 1.0);
        b.vLower = std::max(m0 + m1 - 1.0, 0.0);
        if (b.vLower <= 0.0) {
            b.alpha = b.beta = 0.0;
            b.lower = -kInf;
            b.upper = kInf;
            b.status = BoundStatus::Lost;
            break;
        }
        b.alpha = std::min(b.vLower / m1, 1.0);
        b.beta = std::min(b.vLower / m0, 1.0);
        b.lower = trimmed_mean(table, 1, b.alpha, Tail::Lower, mode) - trimmed_mean(table, 0, b.beta, Tail::Upper, mode);
        b.upper = trimmed_mean(table, 1, b.alpha, Tail::Upper, mode) - trimmed_mean(table, 0, b.beta, Tail::Lower, mode);
        b.status = (b.alpha >= 1.0 && b.beta >= 1.0) ? BoundStatus::Identified : BoundStatus::Partial;
        break;
    }
    }
    if (tier != Tier::NoRestriction) b.vLower = std::max(std::clamp(table.pi0, 0.0, 1.0) + std::clamp(table.pi1, 0.0, 1.0) - 1.0, 0.0);
    return b;
}

double selection_mte(const Sample& sample, const PropensityFit& fit, double p, const SmootherConfig& config)
{
    KeptData k = kept_data(sample, fit);
    return local_derivative(k.s, k.phat, p, 1, config);
}

std::optional<double> unconditional_mte(const Sample& sample, const PropensityFit& fit, double p,
                                        const SmootherConfig& config)
{
    KeptData k = kept_data(sample, fit);
    ArmBandwidths hb = table_bandwidths(sample, fit, config);
    SmootherConfig c0 = config, c1 = config;
    c0.bandwidth = hb.h0;
    c1.bandwidth = hb.h1;
    LocalPolynomial lp0(k.phat, p, c0);
    LocalPolynomial lp1(k.phat, p, c1);
    Eigen::VectorXd sd = k.s.cwiseProduct(k.d);
    Eigen::VectorXd su = k.s.cwiseProduct(Eigen::VectorXd::Ones(k.d.size()) - k.d);
    double den1 = lp1.derivative(sd);
    double den0 = lp0.derivative(su);
    if (std::abs(den1) < 1e-8 || std::abs(den0) < 1e-8) return std::nullopt;
    double num1 = lp1.derivative(k.y.cwiseProduct(sd));
    double num0 = lp0.derivative(k.y.cwiseProduct(su));
    return num1 / den1 - num0 / den0;
}

double liv_naive(const Sample& sample, const PropensityFit& fit, double p, const SmootherConfig& config)
{
    KeptData k = kept_data(sample, fit, true);
    if (k.phat.size() == 0) throw InsufficientDataError("liv_naive: no selected observations", 0.0);
    return local_derivative(k.y, k.phat, p, 1, config);
}

}  // namespace mtebounds
