#include "mtebounds/smoother.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mtebounds/errors.hpp"
#include "mtebounds/quadrature.hpp"

namespace mtebounds {

Kernel parse_kernel(const std::string& name)
{
    if (name == "epanechnikov") return Kernel::Epanechnikov;
    if (name == "triangular") return Kernel::Triangular;
    if (name == "uniform") return Kernel::Uniform;
    if (name == "gaussian") return Kernel::Gaussian;
    throw ConfigError("unknown kernel '" + name + "'");
}

double kernel_weight(Kernel kernel, double u)
{
    double a = std::abs(u);
    switch (kernel) {
    case Kernel::Epanechnikov: return a < 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    case Kernel::Triangular: return a < 1.0 ? 1.0 - a : 0.0;
    case Kernel::Uniform: return a < 1.0 ? 0.5 : 0.0;
    case Kernel::Gaussian: return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
    }
    return 0.0;
}

void SmootherConfig::validate() const
{
    if (bandwidth && !(*bandwidth > 0.0)) throw ConfigError("bandwidth must be positive");
    if (!(bandwidthScale > 0.0)) throw ConfigError("bandwidth scale must be positive");
    if (degree < 1) throw ConfigError("local polynomial degree must be at least 1");
    if (!(pilotLo < pilotHi)) throw ConfigError("pilot region must satisfy pilotLo < pilotHi");
    if (derivativeSelector < 0 || derivativeSelector > degree)
        throw ConfigError("derivative selector must lie between 0 and the degree");
}

BandwidthRule parse_bandwidth_rule(const std::string& name)
{
    if (name == "silverman") return BandwidthRule::Silverman;
    if (name == "derivative") return BandwidthRule::Derivative;
    throw ConfigError("unknown bandwidth rule '" + name + "' (expected silverman or derivative)");
}

double rule_of_thumb_bandwidth(const Eigen::VectorXd& phat)
{
    const double n = static_cast<double>(phat.size());
    if (n < 2) throw InsufficientDataError("bandwidth rule needs at least two fitted values", n);
    double mean = phat.mean();
    double sd = std::sqrt((phat.array() - mean).square().sum() / (n - 1.0));
    if (!(sd > 0.0)) throw InsufficientDataError("fitted propensities have no spread", n);
    return 1.06 * sd * std::pow(n, -0.2);
}

double derivative_bandwidth_constant(Kernel kernel, int degree, int selector)
{
    const int k = degree + 1;
    const double lo = kernel == Kernel::Gaussian ? -std::numeric_limits<double>::infinity() : -1.0;
    const double hi = -lo;
    Eigen::MatrixXd S(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            S(i, j) = integrate([&](double t) { return std::pow(t, i + j) * kernel_weight(kernel, t); }, lo, hi).value;
    Eigen::VectorXd row = S.inverse().row(selector).transpose();
    auto equivalent = [&](double t) {
        double poly = 0.0, tp = 1.0;
        for (int j = 0; j < k; ++j) {
            poly += row(j) * tp;
            tp *= t;
        }
        return poly * kernel_weight(kernel, t);
    };
    double sq = integrate([&](double t) { double e = equivalent(t); return e * e; }, lo, hi).value;
    double mom = integrate([&](double t) { return std::pow(t, degree + 1) * equivalent(t); }, lo, hi).value;
    if (std::abs(mom) < 1e-12) throw ConfigError("derivative bandwidth rule needs degree - selector odd");
    double fact = std::tgamma(degree + 2.0);
    double c = fact * fact * (2.0 * selector + 1.0) * sq / (2.0 * (degree + 1 - selector) * mom * mom);
    return std::pow(c, 1.0 / (2.0 * degree + 3.0));
}

double derivative_rot_bandwidth(const Eigen::VectorXd& phat, const Eigen::VectorXd& responses,
                                const SmootherConfig& config)
{
    const Eigen::Index n = phat.size();
    const int p = config.degree;
    const int order = p + 3;
    if (n <= order + 1) throw InsufficientDataError("derivative bandwidth pilot needs more observations", n);
    const double lo = phat.minCoeff();
    const double hi = phat.maxCoeff();
    const double range = hi - lo;
    if (!(range > 0.0)) throw InsufficientDataError("fitted propensities have no spread", n);
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * range;

    Eigen::MatrixXd X(n, order + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        double u = (phat(i) - center) / half;
        double v = 1.0;
        for (int j = 0; j <= order; ++j) {
            X(i, j) = v;
            v *= u;
        }
    }
    Eigen::VectorXd coef = X.colPivHouseholderQr().solve(responses);
    double rss = (responses - X * coef).squaredNorm();
    double sigma2 = rss / static_cast<double>(n - order - 1);

    // (p+1)-th derivative of the pilot polynomial, in the original units.
    const double wlo = std::max(lo, config.pilotLo);
    const double whi = std::min(hi, config.pilotHi);
    if (!(whi > wlo)) throw ConfigError("derivative bandwidth pilot region does not meet the propensity support");
    double curvature = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (phat(i) < wlo || phat(i) > whi) continue;
        double u = (phat(i) - center) / half;
        double d = 0.0;
        for (int j = p + 1; j <= order; ++j) {
            double falling = 1.0;
            for (int m = 0; m <= p; ++m) falling *= (j - m);
            d += coef(j) * falling * std::pow(u, j - p - 1);
        }
        d /= std::pow(half, p + 1);
        curvature += d * d;
    }
    if (!(curvature > 0.0) || !(sigma2 > 0.0)) return range;
    double c = derivative_bandwidth_constant(config.kernel, p, config.derivativeSelector);
    double h = c * std::pow(sigma2 * (whi - wlo) / curvature, 1.0 / (2.0 * p + 3.0));
    return std::min(h, range);
}

LocalPolynomial::LocalPolynomial(const Eigen::VectorXd& phat, double p, const SmootherConfig& config)
{
    config.validate();
    double base;
    if (config.bandwidth)
        base = *config.bandwidth;
    else if (config.rule == BandwidthRule::Silverman)
        base = rule_of_thumb_bandwidth(phat);
    else
        throw ConfigError("the derivative bandwidth rule depends on the response; resolve it with "
                          "table_bandwidth or derivative_rot_bandwidth and pass it explicitly");
    h_ = base * config.bandwidthScale;
    const int k = config.degree + 1;

    std::vector<double> t;
    std::vector<double> w;
    for (Eigen::Index i = 0; i < phat.size(); ++i) {
        double u = (phat(i) - p) / h_;
        double kw = kernel_weight(config.kernel, u);
        if (kw > 0.0) {
            rows_.push_back(i);
            t.push_back(u);
            w.push_back(kw);
        }
    }
    double sw = 0.0, sw2 = 0.0;
    for (double x : w) {
        sw += x;
        sw2 += x * x;
    }
    effectiveN_ = sw2 > 0.0 ? sw * sw / sw2 : 0.0;

    std::vector<double> distinct = t;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (static_cast<int>(distinct.size()) < k)
        throw InsufficientDataError("local polynomial at p=" + std::to_string(p) + " has " +
                                        std::to_string(distinct.size()) + " distinct fitted values in the window",
                                    effectiveN_);

    // Normal equations in the scaled regressor t = (P - p) / h.
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd x(k);
    for (std::size_t r = 0; r < t.size(); ++r) {
        x(0) = 1.0;
        for (int j = 1; j < k; ++j) x(j) = x(j - 1) * t[r];
        M.noalias() += w[r] * x * x.transpose();
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (!lu.isInvertible() || lu.rcond() < 1e-13)
        throw NumericalError("local polynomial normal equations are singular at p=" + std::to_string(p));
    Eigen::VectorXd e = Eigen::VectorXd::Zero(k);
    e(config.derivativeSelector) = 1.0;
    Eigen::VectorXd row = lu.solve(e);  // M is symmetric, so this is the selector row of M^{-1}
    const double scale = std::pow(h_, -config.derivativeSelector);
    weights_.resize(t.size());
    for (std::size_t r = 0; r < t.size(); ++r) {
        x(0) = 1.0;
        for (int j = 1; j < k; ++j) x(j) = x(j - 1) * t[r];
        weights_[r] = scale * w[r] * row.dot(x);
    }
}

double LocalPolynomial::derivative(const Eigen::VectorXd& responses) const
{
    double s = 0.0;
    for (std::size_t r = 0; r < rows_.size(); ++r) s += weights_[r] * responses(rows_[r]);
    return s;
}

double local_derivative(const Eigen::VectorXd& responses, const Eigen::VectorXd& phat, double p, int sign,
                        const SmootherConfig& config)
{
    if (responses.size() != phat.size()) throw ConfigError("local_derivative: responses and phat differ in length");
    if (sign != 1 && sign != -1) throw ConfigError("local_derivative: sign must be +1 or -1");
    SmootherConfig resolved = config;
    if (!config.bandwidth && config.rule == BandwidthRule::Derivative)
        resolved.bandwidth = derivative_rot_bandwidth(phat, responses, config);
    LocalPolynomial fit(phat, p, resolved);
    return sign * fit.derivative(responses);
}

OutcomeGrid OutcomeGrid::from_edges(const Eigen::VectorXd& edges)
{
    if (edges.size() < 2) throw ConfigError("outcome grid needs at least two edges");
    for (Eigen::Index k = 1; k < edges.size(); ++k)
        if (!(edges(k) > edges(k - 1))) throw ConfigError("outcome grid edges must be strictly increasing");
    OutcomeGrid g;
    g.edges = edges;
    g.centers = 0.5 * (edges.head(edges.size() - 1) + edges.tail(edges.size() - 1));
    return g;
}

Eigen::Index OutcomeGrid::bin_of(double y) const
{
    const Eigen::Index K = edges.size();
    if (y < edges(0) || y > edges(K - 1)) return -1;
    const double* begin = edges.data();
    const double* it = std::upper_bound(begin, begin + K, y);
    Eigen::Index k = (it - begin) - 1;
    return std::min(k, K - 2);
}

OutcomeGrid quantile_grid(const Sample& sample, int count)
{
    if (count < 2) throw ConfigError("quantile grid needs at least two points");
    std::vector<double> ys;
    for (Eigen::Index i = 0; i < sample.size(); ++i)
        if (sample.s(i) == 1.0) ys.push_back(sample.y(i));
    if (ys.size() < 2) throw InsufficientDataError("fewer than two selected outcomes", static_cast<double>(ys.size()));
    std::sort(ys.begin(), ys.end());
    std::vector<double> edges;
    const double last = static_cast<double>(ys.size() - 1);
    for (int j = 0; j < count; ++j) {
        double h = last * j / (count - 1);
        std::size_t lo = static_cast<std::size_t>(std::floor(h));
        std::size_t hi = std::min(lo + 1, ys.size() - 1);
        double v = ys[lo] + (h - static_cast<double>(lo)) * (ys[hi] - ys[lo]);
        if (edges.empty() || v > edges.back()) edges.push_back(v);
    }
    if (edges.size() < 2) throw InsufficientDataError("selected outcomes are constant", static_cast<double>(ys.size()));
    return OutcomeGrid::from_edges(Eigen::Map<Eigen::VectorXd>(edges.data(), static_cast<Eigen::Index>(edges.size())));
}

void finalize_table(ConditionalOutcomeTable& t)
{
    const Eigen::Index K = t.grid.bins();
    t.rawMass0 = t.gamma0.sum();
    t.rawMass1 = t.gamma1.sum();
    Eigen::VectorXd g0 = t.gamma0.cwiseMax(0.0);
    Eigen::VectorXd g1 = t.gamma1.cwiseMax(0.0);
    double s0 = g0.sum();
    double s1 = g1.sum();
    t.estimable = t.pi1 > 0.0 && t.pi0 > 0.0 && s0 > 0.0 && s1 > 0.0;
    t.alphaHat = t.pi1 > 0.0 ? std::clamp(t.pi0 / t.pi1, 0.0, 1.0) : 0.0;
    t.f0 = s0 > 0.0 ? Eigen::VectorXd(g0 / s0) : Eigen::VectorXd::Zero(K);
    t.f1 = s1 > 0.0 ? Eigen::VectorXd(g1 / s1) : Eigen::VectorXd::Zero(K);
    t.F0.resize(K);
    t.F1.resize(K);
    double c0 = 0.0, c1 = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
        c0 += t.f0(k);
        c1 += t.f1(k);
        t.F0(k) = c0;
        t.F1(k) = c1;
    }
    if (s0 > 0.0) t.F0(K - 1) = 1.0;
    if (s1 > 0.0) t.F1(K - 1) = 1.0;
}

ArmBandwidths table_bandwidths(const Sample& sample, const PropensityFit& fit, const SmootherConfig& config)
{
    if (config.bandwidth) return {*config.bandwidth, *config.bandwidth};
    std::vector<Eigen::Index> kept;
    for (Eigen::Index i = 0; i < sample.size(); ++i)
        if (fit.keptMask[static_cast<std::size_t>(i)]) kept.push_back(i);
    const auto m = static_cast<Eigen::Index>(kept.size());
    Eigen::VectorXd phat(m), sd(m), su(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        Eigen::Index i = kept[static_cast<std::size_t>(r)];
        phat(r) = fit.phat(i);
        sd(r) = sample.s(i) * sample.d(i);
        su(r) = sample.s(i) * (1.0 - sample.d(i));
    }
    if (config.rule == BandwidthRule::Silverman) {
        double h = rule_of_thumb_bandwidth(phat);
        return {h, h};
    }
    return {derivative_rot_bandwidth(phat, su, config), derivative_rot_bandwidth(phat, sd, config)};
}

ConditionalOutcomeTable build_table(const Sample& sample, const PropensityFit& fit, double p,
                                    const OutcomeGrid& grid, const SmootherConfig& config,
                                    const std::optional<ArmBandwidths>& bandwidths)
{
    std::vector<Eigen::Index> kept;
    for (Eigen::Index i = 0; i < sample.size(); ++i)
        if (fit.keptMask[static_cast<std::size_t>(i)]) kept.push_back(i);
    Eigen::VectorXd phat(static_cast<Eigen::Index>(kept.size()));
    for (std::size_t r = 0; r < kept.size(); ++r) phat(static_cast<Eigen::Index>(r)) = fit.phat(kept[r]);

    ArmBandwidths hb = bandwidths ? *bandwidths : table_bandwidths(sample, fit, config);
    ConditionalOutcomeTable t;
    t.p = p;
    t.grid = grid;
    const Eigen::Index K = grid.bins();
    t.gamma0 = Eigen::VectorXd::Zero(K);
    t.gamma1 = Eigen::VectorXd::Zero(K);
    for (int arm = 0; arm < 2; ++arm) {
        SmootherConfig resolved = config;
        resolved.bandwidth = arm == 1 ? hb.h1 : hb.h0;
        LocalPolynomial lp(phat, p, resolved);
        (arm == 1 ? t.h1 : t.h0) = lp.bandwidth();
        const double sign = arm == 1 ? 1.0 : -1.0;
        const double armValue = arm;
        double& pi = arm == 1 ? t.pi1 : t.pi0;
        Eigen::VectorXd& gamma = arm == 1 ? t.gamma1 : t.gamma0;
        const auto& rows = lp.rows();
        const auto& w = lp.weights();
        for (std::size_t r = 0; r < rows.size(); ++r) {
            Eigen::Index i = kept[static_cast<std::size_t>(rows[r])];
            if (sample.s(i) != 1.0 || sample.d(i) != armValue) continue;
            pi += sign * w[r];
            Eigen::Index k = grid.bin_of(sample.y(i));
            if (k >= 0) gamma(k) += sign * w[r];
        }
    }
    const double h = std::max(t.h0, t.h1);
    t.boundary = p < phat.minCoeff() + h / 2.0 || p > phat.maxCoeff() - h / 2.0;
    finalize_table(t);
    return t;
}

}  // namespace mtebounds
