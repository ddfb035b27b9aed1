#include "mtebounds/dgp.hpp"

#include <cmath>
#include <random>

#include "mtebounds/errors.hpp"
#include "mtebounds/normal.hpp"

namespace mtebounds {

namespace {

class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}
    double next()
    {
        // (k + 0.5) / 2^53 lies strictly inside (0, 1).
        double u = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
        return normal_quantile(u);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace

double DgpConfig::beta(int d, int t) const
{
    if (d == 0) return t == 0 ? beta00 : beta01;
    return t == 0 ? beta10 : beta11;
}

void DgpConfig::validate() const
{
    for (double v : {delta0, delta1, beta00, beta01, beta10, beta11, outcomeNoiseSd})
        if (!std::isfinite(v)) throw ConfigError("DgpConfig: all parameters must be finite");
    if (outcomeNoiseSd < 0.0) throw ConfigError("DgpConfig: outcomeNoiseSd must be non-negative");
}

DgpConfig panel_a()
{
    return DgpConfig{0.75, 1.5, 0.1, 0.1, 0.1, 0.2, 1.0};
}

DgpConfig panel_b()
{
    return DgpConfig{0.2, 2.0, 0.1, 0.1, 0.1, 0.2, 1.0};
}

DgpConfig illustration()
{
    return DgpConfig{0.1, 0.4, 1.0, 1.0, 1.0, 5.0, 1.0};
}

DgpConfig panel_by_name(const std::string& name)
{
    if (name == "A" || name == "a") return panel_a();
    if (name == "B" || name == "b") return panel_b();
    if (name == "C" || name == "c" || name == "illustration") return illustration();
    throw ConfigError("unknown panel '" + name + "' (expected A, B or C)");
}

void Sample::validate() const
{
    const Eigen::Index n = y.size();
    if (s.size() != n || d.size() != n || z.rows() != n || (x.cols() > 0 && x.rows() != n))
        throw ConfigError("Sample: column lengths differ");
    if (latent && static_cast<Eigen::Index>(latent->size()) != n)
        throw ConfigError("Sample: latent rows not aligned");
    for (Eigen::Index i = 0; i < n; ++i) {
        if ((s(i) != 0.0 && s(i) != 1.0) || (d(i) != 0.0 && d(i) != 1.0))
            throw ConfigError("Sample: s and d must be binary (row " + std::to_string(i + 1) + ")");
        if (s(i) == 0.0 && y(i) != 0.0)
            throw ConfigError("Sample: y must be 0 when s = 0 (row " + std::to_string(i + 1) + ")");
        if (!std::isfinite(y(i))) throw ConfigError("Sample: non-finite y (row " + std::to_string(i + 1) + ")");
    }
}

LatentDraw assemble(const DgpConfig& c, double theta, double epsS, double z, double xi, double eta)
{
    LatentDraw l;
    l.theta = theta;
    l.epsS = epsS;
    l.z = z;
    l.xi = xi;
    l.t = xi >= 0.0 ? 1 : 0;
    l.v = normal_cdf(theta);
    l.uS = (theta + epsS) / kSqrt2;
    double noise = c.outcomeNoiseSd * eta;
    l.y0 = (l.t == 1 ? c.beta01 * theta : -c.beta00 * theta) + noise;
    l.y1 = (l.t == 1 ? c.beta11 * theta : -c.beta10 * theta) + noise;
    l.s0 = l.uS <= c.delta0 ? 1 : 0;
    l.s1 = l.uS <= c.delta0 + c.delta1 ? 1 : 0;
    return l;
}

Sample generate(const DgpConfig& config, Eigen::Index n, std::uint64_t seed, int numCovariates)
{
    config.validate();
    if (n < 1) throw ConfigError("generate: n must be at least 1");
    if (numCovariates < 0) throw ConfigError("generate: negative covariate count");

    Sample out;
    out.y.resize(n);
    out.s.resize(n);
    out.d.resize(n);
    out.z.resize(n, 1);
    out.x.resize(n, numCovariates);
    std::vector<LatentDraw> latent(static_cast<std::size_t>(n));

    NormalStream stream(seed);
    for (Eigen::Index i = 0; i < n; ++i) {
        double theta = stream.next();
        double epsS = stream.next();
        double z = stream.next();
        double xi = stream.next();
        double eta = stream.next();
        LatentDraw l = assemble(config, theta, epsS, z, xi, eta);
        int d = l.v <= normal_cdf(z) ? 1 : 0;
        int s = d == 1 ? l.s1 : l.s0;
        out.d(i) = d;
        out.s(i) = s;
        out.y(i) = s == 1 ? (d == 1 ? l.y1 : l.y0) : 0.0;
        out.z(i, 0) = z;
        latent[static_cast<std::size_t>(i)] = l;
    }
    if (numCovariates > 0) {
        NormalStream xs(seed ^ 0x9e3779b97f4a7c15ULL);
        for (Eigen::Index i = 0; i < n; ++i)
            for (int j = 0; j < numCovariates; ++j) out.x(i, j) = xs.next();
    }
    out.latent = std::move(latent);
    return out;
}

}  // namespace mtebounds
