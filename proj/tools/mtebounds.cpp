#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <deque>
#include <functional>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "mtebounds/aggregate.hpp"
#include "mtebounds/diagnostics.hpp"
#include "mtebounds/discrete.hpp"
#include "mtebounds/dmte.hpp"
#include "mtebounds/errors.hpp"
#include "mtebounds/montecarlo.hpp"
#include "mtebounds/npbounds.hpp"
#include "mtebounds/oracle.hpp"
#include "mtebounds/parbounds.hpp"

using namespace mtebounds;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitViolation = 4;

struct ViolationExit {};

// ---------------------------------------------------------------- options

struct DgpOptions {
    std::string panel = "A";
    std::optional<double> delta0, delta1, beta00, beta01, beta10, beta11, noiseSd;

    DgpConfig resolve() const
    {
        DgpConfig c = panel_by_name(panel);
        if (delta0) c.delta0 = *delta0;
        if (delta1) c.delta1 = *delta1;
        if (beta00) c.beta00 = *beta00;
        if (beta01) c.beta01 = *beta01;
        if (beta10) c.beta10 = *beta10;
        if (beta11) c.beta11 = *beta11;
        if (noiseSd) c.outcomeNoiseSd = *noiseSd;
        c.validate();
        return c;
    }
};

struct SampleOptions {
    std::string input;
    long n = 10000;
    std::uint64_t seed = 1;
    int covariates = 0;
};

struct SmootherOptions {
    std::string kernel = "epanechnikov";
    std::optional<double> bandwidth;
    double bandwidthScale = 1.0;
    std::string bandwidthRule = "derivative";
    int gridPoints = 11;
    bool fractionalTrim = false;

    SmootherConfig resolve() const
    {
        SmootherConfig c;
        c.kernel = parse_kernel(kernel);
        c.bandwidth = bandwidth;
        c.bandwidthScale = bandwidthScale;
        c.rule = parse_bandwidth_rule(bandwidthRule);
        c.validate();
        return c;
    }
    TrimMode trim() const { return fractionalTrim ? TrimMode::Fractional : TrimMode::Verbatim; }
};

struct PropensityOptions {
    double lambdaTrim = 0.001;
    double supportTrim = 0.01;
    bool withCovariates = false;

    PropensityConfig resolve() const
    {
        PropensityConfig c;
        c.lambdaTrim = lambdaTrim;
        c.supportTrimPct = supportTrim;
        c.includeCovariates = withCovariates;
        c.validate();
        return c;
    }
};

struct Options {
    DgpOptions dgp;
    SampleOptions sample;
    SmootherOptions smoother;
    PropensityOptions propensity;
    std::string out = "out";
    std::string pGrid;
    std::string tier = "monotone";
    bool debugTables = false;
    // simulate
    bool withLatent = false;
    // estimate-param
    int bins = 20;
    // weights / aggregate
    std::vector<std::string> kinds;
    double lateLo = 0.2;
    double lateHi = 0.8;
    std::string policy;
    // discrete
    int cells = 0;
    int zColumn = 1;
    double yStep = 0.05;
    // dmte
    std::string set;
    std::string range;
    // diagnose
    double tolerance = 0.05;
    bool failOnViolation = false;
    int permutations = 199;
    // montecarlo
    int reps = 200;
    int threads = 0;
};

void add_out(CLI::App* sub, Options& o)
{
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
}

void add_dgp(CLI::App* sub, Options& o)
{
    sub->add_option("--panel", o.dgp.panel, "Parameter preset: A, B or C (illustration)")->capture_default_str();
    sub->add_option("--delta0", o.dgp.delta0, "Selection intercept");
    sub->add_option("--delta1", o.dgp.delta1, "Selection shift from treatment");
    sub->add_option("--beta00", o.dgp.beta00, "Untreated slope, T = 0");
    sub->add_option("--beta01", o.dgp.beta01, "Untreated slope, T = 1");
    sub->add_option("--beta10", o.dgp.beta10, "Treated slope, T = 0");
    sub->add_option("--beta11", o.dgp.beta11, "Treated slope, T = 1");
    sub->add_option("--noise-sd", o.dgp.noiseSd, "Outcome noise standard deviation");
}

void add_sample(CLI::App* sub, Options& o)
{
    sub->add_option("--input", o.sample.input, "Sample CSV with header y,s,d,z[,x1..xq]; simulated when absent");
    sub->add_option("--n", o.sample.n, "Simulated sample size")->capture_default_str();
    sub->add_option("--seed", o.sample.seed, "Random seed")->capture_default_str();
    sub->add_option("--covariates", o.sample.covariates, "Number of simulated covariates")->capture_default_str();
    add_dgp(sub, o);
}

void add_smoother(CLI::App* sub, Options& o)
{
    sub->add_option("--kernel", o.smoother.kernel, "Kernel: epanechnikov, triangular, uniform, gaussian")
        ->capture_default_str();
    sub->add_option("--bandwidth", o.smoother.bandwidth, "Fixed bandwidth for both arms");
    sub->add_option("--bandwidth-scale", o.smoother.bandwidthScale, "Multiplier on the bandwidth")->capture_default_str();
    sub->add_option("--bandwidth-rule", o.smoother.bandwidthRule, "Bandwidth rule: derivative or silverman")
        ->capture_default_str();
    sub->add_option("--grid-points", o.smoother.gridPoints, "Outcome grid points (sample quantiles)")->capture_default_str();
    sub->add_flag("--fractional-trim", o.smoother.fractionalTrim, "Trim the boundary bin proportionally");
}

void add_propensity(CLI::App* sub, Options& o)
{
    sub->add_option("--lambda-trim", o.propensity.lambdaTrim, "Clamp fitted propensities to [l, 1-l]")
        ->capture_default_str();
    sub->add_option("--support-trim", o.propensity.supportTrim, "Share trimmed from each end of the common support")
        ->capture_default_str();
    sub->add_flag("--with-covariates", o.propensity.withCovariates, "Include covariates in the propensity index");
}

void add_grid(CLI::App* sub, Options& o, const std::string& fallback)
{
    o.pGrid = fallback;
    sub->add_option("--p-grid,--p", o.pGrid, "Evaluation points: start:stop:count or a comma list")->capture_default_str();
}

// ---------------------------------------------------------------- helpers

std::vector<double> parse_grid(const std::string& text)
{
    std::vector<double> out;
    try {
        if (text.find(':') != std::string::npos) {
            std::stringstream ss(text);
            std::string a, b, c;
            std::getline(ss, a, ':');
            std::getline(ss, b, ':');
            std::getline(ss, c, ':');
            double lo = std::stod(a), hi = std::stod(b);
            int count = std::stoi(c);
            if (count < 1) throw ConfigError("p-grid count must be positive");
            for (int i = 0; i < count; ++i) out.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
        } else {
            std::stringstream ss(text);
            std::string item;
            while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
        }
    } catch (const std::logic_error& e) {
        if (dynamic_cast<const ConfigError*>(&e)) throw;
        throw ConfigError("p-grid: cannot parse '" + text + "'");
    }
    if (out.empty()) throw ConfigError("p-grid: no points");
    for (double p : out)
        if (!(p > 0.0 && p < 1.0)) throw ConfigError("p-grid: points must lie in (0,1)");
    return out;
}

Sample read_sample_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open input file " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cell.erase(0, cell.find_first_not_of(" \t\r"));
            cell.erase(cell.find_last_not_of(" \t\r") + 1);
            header.push_back(cell);
        }
    }
    int iy = -1, is = -1, id = -1;
    std::vector<int> zc, xc;
    const std::regex zre("z[0-9]*"), xre("x[0-9]+");
    for (int j = 0; j < static_cast<int>(header.size()); ++j) {
        const std::string& h = header[static_cast<std::size_t>(j)];
        if (h == "y") iy = j;
        else if (h == "s") is = j;
        else if (h == "d") id = j;
        else if (std::regex_match(h, zre)) zc.push_back(j);
        else if (std::regex_match(h, xre)) xc.push_back(j);
        else throw ConfigError(path + ": unknown column '" + h + "'");
    }
    if (iy < 0 || is < 0 || id < 0 || zc.empty()) throw ConfigError(path + ": header must contain y,s,d,z");
    std::vector<std::vector<double>> rows;
    long lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> r;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                r.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw ConfigError(path + ":" + std::to_string(lineNo) + ": non-numeric value '" + cell + "'");
            }
        }
        if (r.size() != header.size())
            throw ConfigError(path + ":" + std::to_string(lineNo) + ": expected " + std::to_string(header.size()) +
                              " fields");
        rows.push_back(std::move(r));
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    Sample s;
    s.y.resize(n);
    s.s.resize(n);
    s.d.resize(n);
    s.z.resize(n, static_cast<Eigen::Index>(zc.size()));
    s.x.resize(n, static_cast<Eigen::Index>(xc.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        s.y(i) = r[static_cast<std::size_t>(iy)];
        s.s(i) = r[static_cast<std::size_t>(is)];
        s.d(i) = r[static_cast<std::size_t>(id)];
        for (std::size_t j = 0; j < zc.size(); ++j) s.z(i, static_cast<Eigen::Index>(j)) = r[static_cast<std::size_t>(zc[j])];
        for (std::size_t j = 0; j < xc.size(); ++j) s.x(i, static_cast<Eigen::Index>(j)) = r[static_cast<std::size_t>(xc[j])];
    }
    s.validate();
    return s;
}

Sample load_sample(const Options& o)
{
    if (!o.sample.input.empty()) return read_sample_csv(o.sample.input);
    return generate(o.dgp.resolve(), o.sample.n, o.sample.seed, o.sample.covariates);
}

class Run {
public:
    Run(const std::string& name, const Options& o, CLI::App* sub)
        : name_(name), dir_(o.out), sub_(sub), start_(std::chrono::steady_clock::now())
    {
        fs::create_directories(dir_);
    }

    std::ofstream open(const std::string& file)
    {
        fs::path p = fs::path(dir_) / file;
        std::ofstream f(p);
        if (!f) throw ConfigError("cannot write " + p.string());
        f << std::setprecision(12);
        outputs_.push_back(p.string());
        return f;
    }

    void finish(const json& extra = json::object())
    {
        double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        json m;
        m["subcommand"] = name_;
        m["version"] = kVersion;
        m["config"] = sub_->config_to_str(true, false);
        m["wall_time_seconds"] = wall;
        m["outputs"] = outputs_;
        for (auto& [k, v] : extra.items()) m[k] = v;
        std::ofstream f(fs::path(dir_) / "manifest.json");
        f << m.dump(2) << "\n";
    }

private:
    std::string name_;
    std::string dir_;
    CLI::App* sub_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::string> outputs_;
};

std::string status_of(const ConditionalOutcomeTable& t)
{
    if (!t.estimable) return "nonestimable";
    return t.boundary ? "boundary" : "ok";
}

BoundPoint nonestimable_point(double p, Tier tier)
{
    BoundPoint b;
    b.p = p;
    b.tier = tier;
    b.lower = b.upper = b.alpha = b.beta = b.vLower = b.xi0 = std::numeric_limits<double>::quiet_NaN();
    b.status = BoundStatus::NonEstimable;
    return b;
}

struct Estimated {
    Sample sample;
    PropensityFit fit;
    OutcomeGrid grid;
    std::vector<std::optional<ConditionalOutcomeTable>> tables;
};

Estimated estimate_tables(const Options& o, const std::vector<double>& ps)
{
    Estimated e;
    e.sample = load_sample(o);
    e.fit = fit_logit(e.sample, o.propensity.resolve());
    e.grid = quantile_grid(e.sample, o.smoother.gridPoints);
    SmootherConfig sc = o.smoother.resolve();
    ArmBandwidths hb = table_bandwidths(e.sample, e.fit, sc);
    for (double p : ps) {
        try {
            e.tables.emplace_back(build_table(e.sample, e.fit, p, e.grid, sc, hb));
        } catch (const InsufficientDataError& err) {
            std::cerr << "p = " << p << ": " << err.what() << "\n";
            e.tables.emplace_back(std::nullopt);
        }
    }
    return e;
}

void write_bounds_header(std::ostream& f, bool share)
{
    f << "p,tier,lower,upper,alpha,beta,v_lower,xi0,status" << (share ? ",nonestimable_share" : "") << "\n";
}

void write_bound(std::ostream& f, const BoundPoint& b)
{
    f << b.p << "," << to_string(b.tier) << "," << b.lower << "," << b.upper << "," << b.alpha << "," << b.beta << ","
      << b.vLower << "," << b.xi0 << "," << to_string(b.status);
}

// ---------------------------------------------------------------- subcommands

void run_simulate(const Options& o, CLI::App* sub)
{
    Run run("simulate", o, sub);
    DgpConfig c = o.dgp.resolve();
    Sample s = generate(c, o.sample.n, o.sample.seed, o.sample.covariates);
    auto f = run.open("sample.csv");
    f << "y,s,d,z";
    for (Eigen::Index j = 0; j < s.x.cols(); ++j) f << ",x" << j + 1;
    if (o.withLatent) f << ",theta,v,s0,s1,y0,y1";
    f << "\n";
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        f << s.y(i) << "," << s.s(i) << "," << s.d(i) << "," << s.z(i, 0);
        for (Eigen::Index j = 0; j < s.x.cols(); ++j) f << "," << s.x(i, j);
        if (o.withLatent) {
            const LatentDraw& l = (*s.latent)[static_cast<std::size_t>(i)];
            f << "," << l.theta << "," << l.v << "," << l.s0 << "," << l.s1 << "," << l.y0 << "," << l.y1;
        }
        f << "\n";
    }
    run.finish({{"seed", o.sample.seed}, {"rows", s.size()}});
}

void run_bounds_oracle(const Options& o, CLI::App* sub)
{
    Run run("bounds-oracle", o, sub);
    DgpConfig c = o.dgp.resolve();
    auto f = run.open("oracle.csv");
    f << "p,alpha,alpha_frechet,beta_frechet,v_lower,mte,lb1,ub1,lb2,ub2,lb3,ub3,xi0,liv,status\n";
    for (double p : parse_grid(o.pGrid)) {
        OracleCurvePoint q = oracle_point(c, p);
        f << q.p << "," << q.alpha << "," << q.alphaFrechet << "," << q.betaFrechet << "," << q.vLower << "," << q.mte
          << "," << q.lb1 << "," << q.ub1 << "," << q.lb2 << "," << q.ub2 << "," << q.lb3 << "," << q.ub3 << ","
          << q.xi0 << "," << q.liv << "," << to_string(q.status1) << "\n";
    }
    run.finish();
}

void run_estimate_np(const Options& o, CLI::App* sub)
{
    Run run("estimate-np", o, sub);
    const std::vector<double> ps = parse_grid(o.pGrid);
    const Tier tier = parse_tier(o.tier);
    Estimated e = estimate_tables(o, ps);

    std::cout << "propensity:";
    for (Eigen::Index j = 0; j < e.fit.logit.coefficients.size(); ++j)
        std::cout << " " << e.fit.logit.names[static_cast<std::size_t>(j)] << "=" << e.fit.logit.coefficients(j);
    std::cout << " loglik=" << e.fit.logit.logLikelihood << " kept=" << e.fit.kept_count() << "\n";

    auto pf = run.open("propensity.csv");
    pf << "row,phat,kept\n";
    for (Eigen::Index i = 0; i < e.sample.size(); ++i)
        pf << i << "," << e.fit.phat(i) << "," << (e.fit.keptMask[static_cast<std::size_t>(i)] ? 1 : 0) << "\n";

    auto f = run.open("bounds.csv");
    write_bounds_header(f, false);
    for (std::size_t j = 0; j < ps.size(); ++j) {
        BoundPoint b = e.tables[j] ? bounds_at(*e.tables[j], tier, o.smoother.trim()) : nonestimable_point(ps[j], tier);
        write_bound(f, b);
        f << "\n";
    }
    if (o.debugTables) {
        auto t = run.open("tables.csv");
        t << "p,k,ylo,yhi,gamma0,gamma1,f0,f1,F0,F1,pi0,pi1,alpha_hat,status\n";
        for (const auto& tab : e.tables) {
            if (!tab) continue;
            for (Eigen::Index k = 0; k < tab->grid.bins(); ++k)
                t << tab->p << "," << k << "," << tab->grid.edges(k) << "," << tab->grid.edges(k + 1) << ","
                  << tab->gamma0(k) << "," << tab->gamma1(k) << "," << tab->f0(k) << "," << tab->f1(k) << ","
                  << tab->F0(k) << "," << tab->F1(k) << "," << tab->pi0 << "," << tab->pi1 << "," << tab->alphaHat
                  << "," << status_of(*tab) << "\n";
        }
    }
    run.finish({{"seed", o.sample.seed}});
}

void run_estimate_param(const Options& o, CLI::App* sub)
{
    Run run("estimate-param", o, sub);
    const std::vector<double> ps = parse_grid(o.pGrid);
    const Tier tier = parse_tier(o.tier);
    Sample s = load_sample(o);
    PropensityFit fit = fit_logit(s, o.propensity.resolve());
    OutcomeGrid grid = parametric_grid(s, o.bins);
    ParametricFit pf = fit_parametric(s, fit, s.x, grid);

    CovariateMatrix rows(fit.kept_count(), s.x.cols());
    for (Eigen::Index i = 0, r = 0; i < s.size(); ++i)
        if (fit.keptMask[static_cast<std::size_t>(i)]) rows.row(r++) = s.x.row(i);
    std::vector<ScmtePoint> curve = scmte_bounds(pf, rows, ps, tier, o.smoother.trim());

    auto f = run.open("bounds.csv");
    write_bounds_header(f, true);
    for (const auto& c : curve) {
        write_bound(f, c.bound);
        f << "," << c.nonestimableShare << "\n";
        if (c.flagged) std::cerr << "p = " << c.bound.p << ": more than half of the covariate rows are nonestimable\n";
    }
    double gap = 0.0;
    Eigen::RowVectorXd xbar = s.x.cols() > 0 ? Eigen::RowVectorXd(rows.colwise().mean()) : Eigen::RowVectorXd();
    for (double p : ps) gap = std::max(gap, consistency_gap(parametric_derivatives(pf, p, xbar)));
    std::cout << "largest bin/selection consistency gap at the covariate mean: " << gap << "\n";
    run.finish({{"seed", o.sample.seed}, {"consistency_gap", gap}});
}

std::vector<WeightSpec> weight_specs(const Options& o)
{
    std::vector<std::string> kinds = o.kinds;
    if (kinds.empty()) {
        kinds = {"ate", "att", "atu", "late"};
        if (!o.policy.empty()) kinds.push_back("prte");
    }
    std::optional<PolicyPair> policy;
    if (!o.policy.empty()) {
        std::ifstream in(o.policy);
        if (!in) throw ConfigError("cannot open policy file " + o.policy);
        std::string line;
        std::getline(in, line);
        std::vector<double> g, a, b;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            std::stringstream ss(line);
            std::string c1, c2, c3;
            std::getline(ss, c1, ',');
            std::getline(ss, c2, ',');
            std::getline(ss, c3, ',');
            try {
                g.push_back(std::stod(c1));
                a.push_back(std::stod(c2));
                b.push_back(std::stod(c3));
            } catch (const std::exception&) {
                throw ConfigError(o.policy + ": expected rows p,cdf_a,cdf_a_prime");
            }
        }
        PolicyPair pp;
        pp.grid = Eigen::Map<Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
        pp.cdfA = Eigen::Map<Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
        pp.cdfAPrime = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
        pp.validate();
        policy = pp;
    }
    std::vector<WeightSpec> specs;
    for (const auto& k : kinds) {
        WeightKind kind = parse_weight_kind(k);
        if (kind == WeightKind::LATE) specs.push_back(WeightSpec::late(o.lateLo, o.lateHi));
        else if (kind == WeightKind::PRTE) {
            if (!policy) throw ConfigError("prte weights need --policy");
            specs.push_back(WeightSpec::prte(*policy));
        } else {
            WeightSpec w;
            w.kind = kind;
            specs.push_back(w);
        }
    }
    return specs;
}

// Weight inputs and bound curve on the evaluation grid, from the oracle or
// from data.
struct WeightInputs {
    Eigen::VectorXd grid, pi0, fP;
    BoundCurve curve;
    std::optional<DgpConfig> oracle;
};

WeightInputs weight_inputs(const Options& o, Tier tier)
{
    const std::vector<double> ps = parse_grid(o.pGrid);
    WeightInputs w;
    const auto n = static_cast<Eigen::Index>(ps.size());
    w.grid = Eigen::Map<const Eigen::VectorXd>(ps.data(), n);
    w.pi0.resize(n);
    if (o.sample.input.empty()) {
        DgpConfig c = o.dgp.resolve();
        w.oracle = c;
        // The instrument is standard normal and P(Z) = Phi(Z), so P(Z) is uniform.
        w.fP = Eigen::VectorXd::Ones(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            w.pi0(j) = closed_forms(c, ps[static_cast<std::size_t>(j)]).m0;
            TierBounds tb = true_bounds(c, ps[static_cast<std::size_t>(j)], tier);
            BoundPoint b;
            b.p = ps[static_cast<std::size_t>(j)];
            b.tier = tier;
            b.lower = tb.lower;
            b.upper = tb.upper;
            b.status = tb.status;
            w.curve.push_back(b);
        }
        return w;
    }
    Estimated e = estimate_tables(o, ps);
    std::vector<double> kept;
    for (Eigen::Index i = 0; i < e.sample.size(); ++i)
        if (e.fit.keptMask[static_cast<std::size_t>(i)]) kept.push_back(e.fit.phat(i));
    w.fP = propensity_density(Eigen::Map<Eigen::VectorXd>(kept.data(), static_cast<Eigen::Index>(kept.size())), w.grid);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& t = e.tables[static_cast<std::size_t>(j)];
        w.pi0(j) = t ? std::max(t->pi0, 0.0) : 0.0;
        w.curve.push_back(t ? bounds_at(*t, tier, o.smoother.trim()) : nonestimable_point(ps[static_cast<std::size_t>(j)], tier));
    }
    return w;
}

void run_weights(const Options& o, CLI::App* sub)
{
    Run run("weights", o, sub);
    WeightInputs in = weight_inputs(o, parse_tier(o.tier));
    for (const WeightSpec& spec : weight_specs(o)) {
        WeightCurve wc = weight_curve(spec, in.grid, in.pi0, in.fP);
        std::string kind = to_string(spec.kind);
        std::transform(kind.begin(), kind.end(), kind.begin(), [](unsigned char ch) { return std::tolower(ch); });
        auto f = run.open("weights_" + kind + ".csv");
        f << "p,omega\n";
        for (Eigen::Index j = 0; j < wc.p.size(); ++j) f << wc.p(j) << "," << wc.omega(j) << "\n";
    }
    run.finish();
}

void run_aggregate(const Options& o, CLI::App* sub)
{
    Run run("aggregate", o, sub);
    WeightInputs in = weight_inputs(o, parse_tier(o.tier));
    auto f = run.open("aggregate.csv");
    f << "kind,lower,upper,weight_integral,lost_mass\n";
    for (const WeightSpec& spec : weight_specs(o)) {
        WeightCurve wc = weight_curve(spec, in.grid, in.pi0, in.fP);
        AggregateBound a = aggregate_bounds(in.curve, wc);
        f << to_string(a.kind) << "," << a.lower << "," << a.upper << "," << a.weightIntegral << "," << a.lostMass << "\n";
        if (in.oracle) {
            Eigen::VectorXd mte(in.grid.size());
            for (Eigen::Index j = 0; j < mte.size(); ++j) mte(j) = true_mte(*in.oracle, in.grid(j));
            std::cout << to_string(a.kind) << ": [" << a.lower << ", " << a.upper
                      << "], true value " << trapezoid(wc.p, mte.cwiseProduct(wc.omega), wc.lo, wc.hi) << "\n";
        }
    }
    run.finish();
}

void run_discrete(const Options& o, CLI::App* sub)
{
    Run run("discrete", o, sub);
    DiscreteLadder ladder;
    if (o.cells > 0) {
        DgpConfig c = o.dgp.resolve();
        const double span = 6.0 * std::sqrt(0.04 + c.outcomeNoiseSd * c.outcomeNoiseSd) + 4.0 * std::max({c.beta00, c.beta01, c.beta10, c.beta11});
        const int steps = static_cast<int>(std::ceil(2.0 * span / o.yStep));
        Eigen::VectorXd edges = Eigen::VectorXd::LinSpaced(steps + 1, -span, span);
        ladder = population_ladder(c, o.cells, OutcomeGrid::from_edges(edges));
    } else {
        Sample s = load_sample(o);
        ladder = build_ladder(s, quantile_grid(s, o.smoother.gridPoints), o.zColumn - 1);
    }
    auto f = run.open("discrete.csv");
    f << "ell,p_lo,p_hi,alpha_tilde,lower,upper,status\n";
    for (const LateBound& b : all_late_bounds(ladder, o.smoother.trim()))
        f << b.ell << "," << b.pLo << "," << b.pHi << "," << b.alphaTilde << "," << b.lower << "," << b.upper << ","
          << (b.violation ? std::string("violation") : to_string(b.status)) << "\n";
    run.finish({{"levels", ladder.levels.size()}});
}

void run_dmte(const Options& o, CLI::App* sub)
{
    Run run("dmte", o, sub);
    const std::vector<double> ps = parse_grid(o.pGrid);
    Estimated e = estimate_tables(o, ps);
    OutcomeSet set;
    if (!o.set.empty()) set = OutcomeSet::parse(o.set);
    else if (!o.range.empty()) {
        auto colon = o.range.find(':');
        if (colon == std::string::npos) throw ConfigError("--range expects lo:hi");
        set = OutcomeSet::cover(e.grid, std::stod(o.range.substr(0, colon)), std::stod(o.range.substr(colon + 1)));
        if (set.widened) std::cerr << "outcome set widened to bin edges: " << set.to_string() << "\n";
    } else
        throw ConfigError("dmte needs --set or --range");
    auto f = run.open("dmte.csv");
    f << "p,set,pA1,pA0,lower,upper\n";
    for (std::size_t j = 0; j < ps.size(); ++j) {
        if (!e.tables[j]) {
            f << ps[j] << "," << set.to_string() << ",nan,nan,nan,nan\n";
            continue;
        }
        DmteBound b = dmte_bounds(*e.tables[j], set);
        f << b.p << "," << set.to_string() << "," << b.pA1 << "," << b.pA0 << "," << b.lower << "," << b.upper << "\n";
    }
    run.finish({{"seed", o.sample.seed}});
}

void run_diagnose(const Options& o, CLI::App* sub)
{
    Run run("diagnose", o, sub);
    Sample s = load_sample(o);
    std::vector<double> zs(s.z.col(0).data(), s.z.col(0).data() + s.size());
    std::sort(zs.begin(), zs.end());
    const bool binary = std::unique(zs.begin(), zs.end()) - zs.begin() == 2;
    DiagnosticReport report;
    if (binary) {
        report = check_binary(s, quantile_grid(s, o.smoother.gridPoints));
    } else {
        PropensityFit fit = fit_logit(s, o.propensity.resolve());
        OutcomeGrid grid = quantile_grid(s, o.smoother.gridPoints);
        report = check_inequalities(s, fit, parse_grid(o.pGrid), grid, o.smoother.resolve(), o.tolerance);
        IndexSufficiencyConfig ic;
        ic.permutations = o.permutations;
        ic.seed = o.sample.seed;
        DiagnosticReport idx = check_index_sufficiency(s, fit, ic);
        report.checks.insert(report.checks.end(), idx.checks.begin(), idx.checks.end());
    }
    auto f = run.open("diagnostics.csv");
    f << "check,point,slack,violated\n";
    json checks = json::array();
    std::cout << std::left << std::setw(26) << "check" << std::setw(12) << "min slack" << std::setw(10) << "tolerance"
              << "status\n";
    for (const auto& c : report.checks) {
        for (std::size_t i = 0; i < c.slacks.size(); ++i)
            f << c.name << "," << c.points[i] << "," << c.slacks[i] << "," << (c.slacks[i] < -c.tolerance ? 1 : 0) << "\n";
        std::string status = c.skipped ? "skipped" : c.undefined ? "undefined" : c.violated ? "VIOLATED" : "ok";
        std::cout << std::setw(26) << c.name << std::setw(12) << c.minSlack << std::setw(10) << c.tolerance << status
                  << (c.note.empty() ? "" : "  (" + c.note + ")") << "\n";
        checks.push_back({{"name", c.name}, {"min_slack", c.minSlack}, {"tolerance", c.tolerance},
                          {"violated", c.violated}, {"status", status}, {"note", c.note}});
    }
    std::ofstream(fs::path(o.out) / "diagnostics.json") << json{{"checks", checks}, {"excluded", report.excluded}}.dump(2)
                                                        << "\n";
    run.finish({{"seed", o.sample.seed}, {"violation", report.any_violation()}});
    if (o.failOnViolation && report.any_violation()) throw ViolationExit{};
}

void run_montecarlo(const Options& o, CLI::App* sub)
{
    Run run("montecarlo", o, sub);
    McConfig c;
    c.panel = o.dgp.resolve();
    c.n = o.sample.n;
    c.reps = o.reps;
    c.seedBase = o.sample.seed;
    c.pPoints = parse_grid(o.pGrid);
    c.gridPoints = o.smoother.gridPoints;
    c.propensity = o.propensity.resolve();
    c.smoother = o.smoother.resolve();
    c.trim = o.smoother.trim();
    c.threads = o.threads;
    McReport r = run_mc(c);

    auto f = run.open("mc_summary.csv");
    f << "estimand,p,truth,bias,sd,scaled_mse,failures\n";
    for (const auto& cell : r.cells)
        f << to_string(cell.estimand) << "," << cell.p << "," << cell.truth << "," << cell.bias << "," << cell.sd << ","
          << cell.scaledMse << "," << cell.failures << "\n";
    for (const std::string which : {"bias", "mse"}) {
        auto w = run.open("mc_" + which + ".csv");
        w << "estimand";
        for (double p : c.pPoints) w << ",p" << p;
        w << "\n";
        for (int e = 0; e < kNumEstimands; ++e) {
            w << to_string(static_cast<Estimand>(e));
            for (double p : c.pPoints) {
                const McCell& cell = r.cell(static_cast<Estimand>(e), p);
                w << "," << (which == "bias" ? cell.bias : cell.scaledMse);
            }
            w << "\n";
        }
    }
    auto cov = run.open("coverage.csv");
    cov << "p,coverage\n";
    for (std::size_t j = 0; j < c.pPoints.size(); ++j) cov << c.pPoints[j] << "," << r.coverage[j] << "\n";
    if (!r.failureLog.empty()) {
        auto fl = run.open("failures.txt");
        for (const auto& line : r.failureLog) fl << line << "\n";
    }
    std::cout << "replications: " << c.reps << ", failed: " << r.failedReplications << "\n";
    run.finish({{"seed", o.sample.seed}, {"failed_replications", r.failedReplications}});
}

// Expands `--config FILE` (flat key=value lines, # comments) into flags placed
// right after the subcommand; keys already given on the command line win.
std::vector<std::string> expand_config(CLI::App& app, std::vector<std::string> args)
{
    std::size_t subIdx = args.size();
    CLI::App* sub = nullptr;
    for (std::size_t i = 0; i < args.size(); ++i) {
        sub = app.get_subcommand_no_throw(args[i]);
        if (sub) {
            subIdx = i;
            break;
        }
    }
    if (!sub) return args;
    std::string file;
    std::size_t at = args.size();
    for (std::size_t i = subIdx + 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            file = args[i + 1];
            at = i;
            args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            file = args[i].substr(9);
            at = i;
            args.erase(args.begin() + static_cast<long>(i));
            break;
        }
    }
    if (at == args.size() && file.empty()) return args;
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file " + file);
    auto given = [&](const CLI::Option* opt) {
        for (const auto& name : opt->get_lnames())
            for (std::size_t i = subIdx + 1; i < args.size(); ++i)
                if (args[i] == "--" + name || args[i].rfind("--" + name + "=", 0) == 0) return true;
        return false;
    };
    std::vector<std::string> extra;
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        auto trim = [](std::string t) {
            t.erase(0, t.find_first_not_of(" \t\r"));
            t.erase(t.find_last_not_of(" \t\r") + 1);
            return t;
        };
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(file + ":" + std::to_string(lineNo) + ": expected key=value");
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
            value = value.substr(1, value.size() - 2);
        const CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (!opt || key == "config")
            throw ConfigError(file + ":" + std::to_string(lineNo) + ": unknown key '" + key + "' for " + sub->get_name());
        if (given(opt)) continue;
        if (opt->get_expected_min() == 0) {
            if (value == "true" || value == "1" || value == "yes") extra.push_back("--" + key);
            else if (!(value == "false" || value == "0" || value == "no"))
                throw ConfigError(file + ":" + std::to_string(lineNo) + ": flag '" + key + "' expects true or false");
        } else {
            extra.push_back("--" + key);
            extra.push_back(value);
        }
    }
    args.insert(args.begin() + static_cast<long>(subIdx) + 1, extra.begin(), extra.end());
    return args;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Bounds on the marginal treatment effect for the always-observed under sample selection"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    struct Command {
        CLI::App* sub;
        Options* options;
        std::function<void(const Options&, CLI::App*)> run;
    };
    std::deque<Options> store;
    std::vector<Command> commands;
    std::string configFile;
    auto make = [&](const std::string& name, const std::string& help, std::function<void(const Options&, CLI::App*)> run) {
        CLI::App* sub = app.add_subcommand(name, help);
        Options& o = store.emplace_back();
        sub->add_option("--config", configFile, "Flat key=value file of options; command-line flags take precedence");
        add_out(sub, o);
        commands.push_back({sub, &o, std::move(run)});
        return std::pair<CLI::App*, Options&>(sub, o);
    };

    {
        auto [sub, o] = make("simulate", "Draw a sample from the simulation design", run_simulate);
        add_sample(sub, o);
        sub->add_flag("--with-latent", o.withLatent, "Append latent columns theta,v,s0,s1,y0,y1");
    }
    {
        auto [sub, o] = make("bounds-oracle", "Population bounds and closed forms of the simulation design", run_bounds_oracle);
        add_dgp(sub, o);
        add_grid(sub, o, "0.01:0.99:99");
    }
    {
        auto [sub, o] = make("estimate-np", "Nonparametric bound estimates", run_estimate_np);
        add_sample(sub, o);
        add_smoother(sub, o);
        add_propensity(sub, o);
        add_grid(sub, o, "0.1:0.9:9");
        sub->add_option("--tier", o.tier, "no-restriction, monotone, monotone-dominance or no-selection")->capture_default_str();
        sub->add_flag("--debug-tables", o.debugTables, "Also write the per-point conditional outcome tables");
    }
    {
        auto [sub, o] = make("estimate-param", "Parametric bound estimates averaged over covariates", run_estimate_param);
        add_sample(sub, o);
        add_smoother(sub, o);
        add_propensity(sub, o);
        add_grid(sub, o, "0.1:0.9:9");
        sub->add_option("--tier", o.tier, "Assumption tier")->capture_default_str();
        sub->add_option("--bins", o.bins, "Outcome bins")->capture_default_str();
    }
    for (auto [name, help, run] : {std::tuple{"weights", "Policy-parameter weights on the evaluation grid", run_weights},
                                   std::tuple{"aggregate", "Bounds on policy parameters by weighting the bound curve", run_aggregate}}) {
        auto [sub, o] = make(name, help, run);
        add_sample(sub, o);
        add_smoother(sub, o);
        add_propensity(sub, o);
        add_grid(sub, o, "0.005:0.995:199");
        sub->add_option("--tier", o.tier, "Assumption tier of the bound curve")->capture_default_str();
        sub->add_option("--kind", o.kinds, "Weights: ate, att, atu, late, prte (default all available)")->delimiter(',');
        sub->add_option("--late-lo", o.lateLo, "Lower propensity of the LATE interval")->capture_default_str();
        sub->add_option("--late-hi", o.lateHi, "Upper propensity of the LATE interval")->capture_default_str();
        sub->add_option("--policy", o.policy, "CSV p,cdf_a,cdf_a_prime of propensity CDFs for prte");
    }
    {
        auto [sub, o] = make("discrete", "Interval bounds for a discrete instrument", run_discrete);
        add_sample(sub, o);
        add_smoother(sub, o);
        sub->add_option("--cells", o.cells, "Use the exact population ladder with this many instrument cells");
        sub->add_option("--z-column", o.zColumn, "Instrument column (1-based)")->capture_default_str();
        sub->add_option("--y-step", o.yStep, "Outcome bin width for the population ladder")->capture_default_str();
    }
    {
        auto [sub, o] = make("dmte", "Distributional treatment effect bounds for an outcome set", run_dmte);
        add_sample(sub, o);
        add_smoother(sub, o);
        add_propensity(sub, o);
        add_grid(sub, o, "0.1:0.9:9");
        sub->add_option("--set", o.set, "Outcome bins as 0-based index ranges, e.g. 0-3,7");
        sub->add_option("--range", o.range, "Outcome interval lo:hi, widened to bin edges");
    }
    {
        auto [sub, o] = make("diagnose", "Testable implications of the model", run_diagnose);
        add_sample(sub, o);
        add_smoother(sub, o);
        add_propensity(sub, o);
        add_grid(sub, o, "0.1:0.9:9");
        sub->add_option("--tolerance", o.tolerance, "Slack tolerance of the derivative checks")->capture_default_str();
        sub->add_option("--permutations", o.permutations, "Permutations for the index check")->capture_default_str();
        sub->add_flag("--fail-on-violation", o.failOnViolation, "Exit with status 4 when a check is violated");
    }
    {
        auto [sub, o] = make("montecarlo", "Bias and scaled MSE of the estimators over replications", run_montecarlo);
        add_dgp(sub, o);
        add_smoother(sub, o);
        add_propensity(sub, o);
        add_grid(sub, o, "0.1:0.9:9");
        sub->add_option("--n", o.sample.n, "Sample size per replication")->capture_default_str();
        sub->add_option("--reps", o.reps, "Replications")->capture_default_str();
        sub->add_option("--seed", o.sample.seed, "Seed of the first replication")->capture_default_str();
        sub->add_option("--threads", o.threads, "Worker threads (0 = all cores)")->capture_default_str();
    }

    try {
        std::vector<std::string> args = expand_config(app, std::vector<std::string>(argv + 1, argv + argc));
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        for (const Command& c : commands)
            if (c.sub->parsed()) c.run(*c.options, c.sub);
    } catch (const ViolationExit&) {
        std::cerr << "diagnostics: violation detected\n";
        return kExitViolation;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return 0;
}
