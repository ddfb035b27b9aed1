#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtebounds/dgp.hpp"
#include "mtebounds/propensity.hpp"
#include "mtebounds/smoother.hpp"

namespace mtebounds {

struct DiagnosticCheck {
    std::string name;
    std::vector<double> points;
    std::vector<double> slacks;          // signed distance to the nearest boundary, per point
    std::vector<double> standardErrors;  // optional, aligned with slacks
    double minSlack = 0.0;
    double tolerance = 0.0;
    bool violated = false;
    bool undefined = false;
    bool skipped = false;
    std::string note;
};

struct DiagnosticReport {
    std::vector<DiagnosticCheck> checks;
    int excluded = 0;  // evaluation points dropped as nonestimable
    bool any_violation() const;
    const DiagnosticCheck* find(const std::string& name) const;
};

// Fills minSlack and violated from slacks and tolerance.
void summarize_check(DiagnosticCheck& check);

// Signed distance of x to the boundary of [0, 1]; negative outside.
double unit_interval_slack(double x);

// Exact derivative table of the simulation design at V = p; tails outside the
// grid are folded into the end bins.
ConditionalOutcomeTable oracle_table(const DgpConfig& config, double p, const OutcomeGrid& grid);

// Derivative inequalities evaluated on prepared tables: treated and untreated
// cumulative-set slopes in [0, 1] and the selection slope in [0, 1].
DiagnosticReport check_tables(const std::vector<ConditionalOutcomeTable>& tables, double tolerance = 0.05);

DiagnosticReport check_inequalities(const Sample& sample, const PropensityFit& fit,
                                    const std::vector<double>& pGrid, const OutcomeGrid& yGrid,
                                    const SmootherConfig& config, double tolerance = 0.05);

struct IndexSufficiencyConfig {
    int propensityBins = 10;
    int permutations = 199;
    double level = 0.99;  // baseline quantile of the permutation distribution
    int minGroupSize = 20;
    std::uint64_t seed = 7;
};

// Compares the between-group dispersion of residualized cell outcomes, with
// groups formed from instrument values inside propensity bins, against a
// permutation baseline. Slack is 1 - observed / baseline.
DiagnosticReport check_index_sufficiency(const Sample& sample, const PropensityFit& fit,
                                         const IndexSufficiencyConfig& config = {});

// Cell-mean ratio inequalities for a two-valued instrument (first z column).
DiagnosticReport check_binary(const Sample& sample, const OutcomeGrid& yGrid);

}  // namespace mtebounds
