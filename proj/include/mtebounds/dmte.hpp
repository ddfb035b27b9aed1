#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mtebounds/smoother.hpp"
#include "mtebounds/tiers.hpp"

namespace mtebounds {

// Union of grid bins, given as inclusive 0-based bin-index ranges.
struct OutcomeSet {
    std::vector<std::pair<int, int>> ranges;
    // Set when the set was widened to align with bin edges.
    bool widened = false;

    // Parses "0-3,7,9-9".
    static OutcomeSet parse(const std::string& text);
    // Smallest union of bins covering [lo, hi).
    static OutcomeSet cover(const OutcomeGrid& grid, double lo, double hi);
    std::vector<bool> mask(Eigen::Index bins) const;
    std::string to_string() const;
};

struct DmteBound {
    double p = 0.5;
    double pA1 = 0.0;
    double pA0 = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    BoundStatus status = BoundStatus::Partial;
};

// Sharp bounds on P[Y1* in A | OO, V=p] - P[Y0* in A | OO, V=p] given the
// treated-arm set probability, the always-observed share and the
// point-identified untreated term.
DmteBound dmte_from_probabilities(double pA1, double pA0, double alpha);

DmteBound dmte_bounds(const ConditionalOutcomeTable& table, const OutcomeSet& set);

}  // namespace mtebounds
