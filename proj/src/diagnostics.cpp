#include "mtebounds/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "mtebounds/errors.hpp"
#include "mtebounds/oracle.hpp"

namespace mtebounds {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

DiagnosticCheck make_check(const std::string& name, double tolerance)
{
    DiagnosticCheck c;
    c.name = name;
    c.tolerance = tolerance;
    return c;
}

// Worst slack over the cumulative sets (-inf, e_k] built from bin slopes.
double cumulative_slack(const Eigen::VectorXd& gamma)
{
    double run = 0.0, worst = kInf;
    for (Eigen::Index k = 0; k < gamma.size(); ++k) {
        run += gamma(k);
        worst = std::min(worst, unit_interval_slack(run));
    }
    return worst;
}

}  // namespace

bool DiagnosticReport::any_violation() const
{
    return std::any_of(checks.begin(), checks.end(), [](const DiagnosticCheck& c) { return c.violated; });
}

const DiagnosticCheck* DiagnosticReport::find(const std::string& name) const
{
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

void summarize_check(DiagnosticCheck& c)
{
    c.minSlack = c.slacks.empty() ? 0.0 : *std::min_element(c.slacks.begin(), c.slacks.end());
    c.violated = !c.undefined && !c.skipped && c.minSlack < -c.tolerance;
}

double unit_interval_slack(double x)
{
    return std::min(x, 1.0 - x);
}

ConditionalOutcomeTable oracle_table(const DgpConfig& config, double p, const OutcomeGrid& grid)
{
    ClosedForms cf = closed_forms(config, p);
    ConditionalOutcomeTable t;
    t.p = p;
    t.grid = grid;
    t.pi0 = cf.m0;
    t.pi1 = cf.m1;
    const Eigen::Index K = grid.bins();
    t.gamma0.resize(K);
    t.gamma1.resize(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        double lo = k == 0 ? -kInf : grid.edges(k);
        double hi = k == K - 1 ? kInf : grid.edges(k + 1);
        auto mass = [&](const NormalMixture& m) {
            return (hi == kInf ? 1.0 : m.cdf(hi)) - (lo == -kInf ? 0.0 : m.cdf(lo));
        };
        t.gamma0(k) = cf.m0 * mass(cf.outcome0);
        t.gamma1(k) = cf.m1 * mass(cf.outcome1);
    }
    finalize_table(t);
    return t;
}

DiagnosticReport check_tables(const std::vector<ConditionalOutcomeTable>& tables, double tolerance)
{
    DiagnosticReport report;
    DiagnosticCheck treated = make_check("treated-slope", tolerance);
    DiagnosticCheck untreated = make_check("untreated-slope", tolerance);
    DiagnosticCheck selection = make_check("selection-slope", tolerance);
    for (const auto& t : tables) {
        treated.points.push_back(t.p);
        untreated.points.push_back(t.p);
        selection.points.push_back(t.p);
        treated.slacks.push_back(std::min(cumulative_slack(t.gamma1), unit_interval_slack(t.pi1)));
        untreated.slacks.push_back(std::min(cumulative_slack(t.gamma0), unit_interval_slack(t.pi0)));
        selection.slacks.push_back(unit_interval_slack(t.pi1 - t.pi0));
    }
    for (DiagnosticCheck* c : {&treated, &untreated, &selection}) {
        summarize_check(*c);
        report.checks.push_back(*c);
    }
    return report;
}

DiagnosticReport check_inequalities(const Sample& sample, const PropensityFit& fit,
                                    const std::vector<double>& pGrid, const OutcomeGrid& yGrid,
                                    const SmootherConfig& config, double tolerance)
{
    std::vector<ConditionalOutcomeTable> tables;
    int excluded = 0;
    ArmBandwidths hb = table_bandwidths(sample, fit, config);
    for (double p : pGrid) {
        try {
            tables.push_back(build_table(sample, fit, p, yGrid, config, hb));
        } catch (const InsufficientDataError&) {
            ++excluded;
        } catch (const NumericalError&) {
            ++excluded;
        }
    }
    DiagnosticReport report = check_tables(tables, tolerance);
    report.excluded = excluded;
    if (excluded > 0)
        for (auto& c : report.checks) c.note = std::to_string(excluded) + " nonestimable points excluded";
    return report;
}

DiagnosticReport check_index_sufficiency(const Sample& sample, const PropensityFit& fit,
                                         const IndexSufficiencyConfig& config)
{
    static const char* names[] = {"index-treated-low", "index-treated", "index-untreated-low",
                                  "index-untreated", "index-missing-treated", "index-missing-untreated"};
    DiagnosticReport report;
    if (sample.z.cols() < 2) {
        for (const char* n : names) {
            DiagnosticCheck c = make_check(n, 0.0);
            c.skipped = true;
            c.note = "holds trivially: scalar instrument with monotone propensity";
            report.checks.push_back(c);
        }
        return report;
    }

    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < sample.size(); ++i)
        if (fit.keptMask[static_cast<std::size_t>(i)]) rows.push_back(i);
    std::sort(rows.begin(), rows.end(), [&](Eigen::Index a, Eigen::Index b) { return fit.phat(a) < fit.phat(b); });
    const auto m = static_cast<Eigen::Index>(rows.size());

    // Median selected outcome defines the lower outcome set.
    std::vector<double> ys;
    for (Eigen::Index i : rows)
        if (sample.s(i) == 1.0) ys.push_back(sample.y(i));
    if (ys.empty()) throw InsufficientDataError("check_index_sufficiency: no selected outcomes", 0.0);
    std::nth_element(ys.begin(), ys.begin() + static_cast<long>(ys.size() / 2), ys.end());
    const double yMed = ys[ys.size() / 2];

    Eigen::MatrixXd outcomes(m, 6);
    for (Eigen::Index r = 0; r < m; ++r) {
        Eigen::Index i = rows[static_cast<std::size_t>(r)];
        double s = sample.s(i), d = sample.d(i), low = sample.y(i) <= yMed ? 1.0 : 0.0;
        outcomes.row(r) << s * d * low, s * d, s * (1 - d) * low, s * (1 - d), (1 - s) * d, (1 - s) * (1 - d);
    }

    // Groups: pattern of instrument columns above their within-bin medians.
    std::vector<int> group(static_cast<std::size_t>(m));
    std::vector<std::pair<Eigen::Index, Eigen::Index>> bins;
    const int B = std::max(1, config.propensityBins);
    Eigen::MatrixXd resid(m, 6);
    for (int b = 0; b < B; ++b) {
        Eigen::Index lo = m * b / B, hi = m * (b + 1) / B;
        if (hi - lo < 3) continue;
        bins.emplace_back(lo, hi);
        for (Eigen::Index c = 0; c < sample.z.cols(); ++c) {
            std::vector<double> zs;
            for (Eigen::Index r = lo; r < hi; ++r) zs.push_back(sample.z(rows[static_cast<std::size_t>(r)], c));
            std::nth_element(zs.begin(), zs.begin() + static_cast<long>(zs.size() / 2), zs.end());
            double med = zs[zs.size() / 2];
            for (Eigen::Index r = lo; r < hi; ++r)
                if (sample.z(rows[static_cast<std::size_t>(r)], c) > med) group[static_cast<std::size_t>(r)] |= 1 << c;
        }
        // Residualize on a quadratic in the propensity within the bin.
        Eigen::MatrixXd X(hi - lo, 3);
        for (Eigen::Index r = lo; r < hi; ++r) {
            double ph = fit.phat(rows[static_cast<std::size_t>(r)]);
            X.row(r - lo) << 1.0, ph, ph * ph;
        }
        Eigen::MatrixXd Y = outcomes.middleRows(lo, hi - lo);
        Eigen::MatrixXd coef = X.colPivHouseholderQr().solve(Y);
        resid.middleRows(lo, hi - lo) = Y - X * coef;
    }

    const int G = 1 << std::min<Eigen::Index>(sample.z.cols(), 16);
    auto dispersion = [&](const std::vector<int>& labels) {
        Eigen::VectorXd stat = Eigen::VectorXd::Zero(6);
        double total = 0.0;
        for (auto [lo, hi] : bins) {
            Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(G, 6);
            Eigen::VectorXd counts = Eigen::VectorXd::Zero(G);
            for (Eigen::Index r = lo; r < hi; ++r) {
                int g = labels[static_cast<std::size_t>(r)];
                sums.row(g) += resid.row(r);
                counts(g) += 1.0;
            }
            for (int g = 0; g < G; ++g)
                if (counts(g) >= config.minGroupSize)
                    stat += (sums.row(g).array().square() / counts(g)).matrix().transpose();
            total += static_cast<double>(hi - lo);
        }
        return Eigen::VectorXd(stat / std::max(total, 1.0));
    };

    bool enoughGroups = false;
    for (auto [lo, hi] : bins) {
        std::map<int, int> counts;
        for (Eigen::Index r = lo; r < hi; ++r) ++counts[group[static_cast<std::size_t>(r)]];
        int big = 0;
        for (auto [g, n] : counts) big += n >= config.minGroupSize;
        if (big >= 2) enoughGroups = true;
    }
    if (!enoughGroups) {
        for (const char* n : names) {
            DiagnosticCheck c = make_check(n, 0.0);
            c.skipped = true;
            c.note = "too few instrument groups per propensity bin";
            report.checks.push_back(c);
        }
        return report;
    }

    Eigen::VectorXd observed = dispersion(group);
    std::mt19937_64 rng(config.seed);
    Eigen::MatrixXd perm(config.permutations, 6);
    std::vector<int> shuffled = group;
    for (int k = 0; k < config.permutations; ++k) {
        for (auto [lo, hi] : bins)
            std::shuffle(shuffled.begin() + lo, shuffled.begin() + hi, rng);
        perm.row(k) = dispersion(shuffled).transpose();
    }
    for (int j = 0; j < 6; ++j) {
        std::vector<double> col(perm.col(j).data(), perm.col(j).data() + perm.rows());
        std::sort(col.begin(), col.end());
        auto idx = static_cast<std::size_t>(std::min<double>(std::ceil(config.level * col.size()) - 1, col.size() - 1));
        double baseline = col[idx];
        DiagnosticCheck c = make_check(names[j], 0.0);
        c.points.push_back(observed(j));
        c.slacks.push_back(baseline > 0.0 ? 1.0 - observed(j) / baseline : (observed(j) > 0.0 ? -kInf : 0.0));
        c.note = "observed " + std::to_string(observed(j)) + ", permutation baseline " + std::to_string(baseline);
        summarize_check(c);
        report.checks.push_back(c);
    }
    return report;
}

DiagnosticReport check_binary(const Sample& sample, const OutcomeGrid& yGrid)
{
    if (sample.z.cols() < 1) throw ConfigError("check_binary: sample has no instrument");
    std::map<double, std::vector<Eigen::Index>> levels;
    for (Eigen::Index i = 0; i < sample.size(); ++i) levels[sample.z(i, 0)].push_back(i);
    if (levels.size() != 2) throw ConfigError("check_binary: instrument must take exactly two values");
    const auto& rows0 = levels.begin()->second;
    const auto& rows1 = levels.rbegin()->second;

    const Eigen::Index K = yGrid.bins();
    struct Cell {
        double n = 0.0, p = 0.0, s = 0.0;
        Eigen::VectorXd q1, q0;
    };
    auto cell = [&](const std::vector<Eigen::Index>& rows) {
        Cell c;
        c.q1 = Eigen::VectorXd::Zero(K);
        c.q0 = Eigen::VectorXd::Zero(K);
        for (Eigen::Index i : rows) {
            c.n += 1.0;
            c.p += sample.d(i);
            c.s += sample.s(i);
            if (sample.s(i) != 1.0) continue;
            // Outcomes outside the grid belong to the end bins of the cumulative sets.
            Eigen::Index k = sample.y(i) < yGrid.edges(0) ? 0 : sample.y(i) > yGrid.edges(K) ? K - 1 : yGrid.bin_of(sample.y(i));
            (sample.d(i) == 1.0 ? c.q1 : c.q0)(k) += 1.0;
        }
        c.p /= c.n;
        c.s /= c.n;
        c.q1 /= c.n;
        c.q0 /= c.n;
        return c;
    };
    Cell c0 = cell(rows0), c1 = cell(rows1);

    DiagnosticReport report;
    DiagnosticCheck treated = make_check("binary-treated", 0.0);
    DiagnosticCheck untreated = make_check("binary-untreated", 0.0);
    DiagnosticCheck selection = make_check("binary-selection", 0.0);
    const double dp = c1.p - c0.p;
    if (std::abs(dp) < 1e-12) {
        for (DiagnosticCheck* c : {&treated, &untreated, &selection}) {
            c->undefined = true;
            c->note = "undefined: propensity equal at both instrument values";
            report.checks.push_back(*c);
        }
        return report;
    }
    auto se = [&](double a1, double a0) {
        return std::sqrt(a1 * (1 - a1) / c1.n + a0 * (1 - a0) / c0.n) / std::abs(dp);
    };
    double run1 = 0.0, run0 = 0.0, cum11 = 0.0, cum10 = 0.0, cum01 = 0.0, cum00 = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
        cum11 += c1.q1(k);
        cum10 += c0.q1(k);
        cum01 += c1.q0(k);
        cum00 += c0.q0(k);
        run1 = (cum11 - cum10) / dp;
        run0 = -(cum01 - cum00) / dp;
        double edge = yGrid.edges(k + 1);
        treated.points.push_back(edge);
        treated.slacks.push_back(unit_interval_slack(run1));
        treated.standardErrors.push_back(se(cum11, cum10));
        untreated.points.push_back(edge);
        untreated.slacks.push_back(unit_interval_slack(run0));
        untreated.standardErrors.push_back(se(cum01, cum00));
    }
    selection.points.push_back(0.0);
    selection.slacks.push_back(unit_interval_slack((c1.s - c0.s) / dp));
    selection.standardErrors.push_back(se(c1.s, c0.s));
    for (DiagnosticCheck* c : {&treated, &untreated, &selection}) {
        c->note = "standard errors ignore sampling noise in the propensity difference";
        summarize_check(*c);
        report.checks.push_back(*c);
    }
    return report;
}

}  // namespace mtebounds
