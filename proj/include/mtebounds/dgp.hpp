#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mtebounds {

struct DgpConfig {
    double delta0 = 0.75;
    double delta1 = 1.5;
    double beta00 = 0.1;
    double beta01 = 0.1;
    double beta10 = 0.1;
    double beta11 = 0.2;
    // Standard deviation of the additive outcome disturbance shared by both
    // potential outcomes. The mixture CDFs of the simulation design imply unit
    // variance; zero recovers the noiseless outcome equation.
    double outcomeNoiseSd = 1.0;

    // beta(d, t): outcome slope for treatment arm d and type t.
    double beta(int d, int t) const;
    void validate() const;
};

DgpConfig panel_a();
DgpConfig panel_b();
// Parameters of the worked illustration (beta11 = 5, others 1).
DgpConfig illustration();
DgpConfig panel_by_name(const std::string& name);

struct LatentDraw {
    double theta = 0.0;
    double epsS = 0.0;
    double z = 0.0;
    double xi = 0.0;
    int t = 0;
    double v = 0.5;
    double uS = 0.0;
    double y0 = 0.0;
    double y1 = 0.0;
    int s0 = 0;
    int s1 = 0;
};

// Observed data. s and d hold 0/1 values; z has one column per instrument and
// x one column per covariate (possibly zero columns).
struct Sample {
    Eigen::VectorXd y;
    Eigen::VectorXd s;
    Eigen::VectorXd d;
    Eigen::MatrixXd z;
    Eigen::MatrixXd x;
    std::optional<std::vector<LatentDraw>> latent;

    Eigen::Index size() const { return y.size(); }
    void validate() const;
};

// Draws n rows from the simulation design. Standard normals come from
// std::mt19937_64 through the inverse normal CDF applied to 53-bit uniforms,
// in the fixed order theta, epsS, z, xi, eta per row. Covariates (iid N(0,1),
// excluded from the model) use a separate stream so requesting them does not
// alter the other columns.
Sample generate(const DgpConfig& config, Eigen::Index n, std::uint64_t seed, int numCovariates = 0);

// Structural equations for one set of primitive shocks.
LatentDraw assemble(const DgpConfig& config, double theta, double epsS, double z, double xi, double eta);

}  // namespace mtebounds
