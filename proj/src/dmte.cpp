#include "mtebounds/dmte.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mtebounds/errors.hpp"

namespace mtebounds {

OutcomeSet OutcomeSet::parse(const std::string& text)
{
    OutcomeSet set;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        auto dash = item.find('-');
        try {
            int a = std::stoi(item.substr(0, dash));
            int b = dash == std::string::npos ? a : std::stoi(item.substr(dash + 1));
            if (a < 0 || b < a) throw ConfigError("bad bin range '" + item + "'");
            set.ranges.emplace_back(a, b);
        } catch (const std::logic_error&) {
            throw ConfigError("bad bin range '" + item + "' in outcome set '" + text + "'");
        }
    }
    if (set.ranges.empty()) throw ConfigError("empty outcome set");
    return set;
}

OutcomeSet OutcomeSet::cover(const OutcomeGrid& grid, double lo, double hi)
{
    if (!(hi > lo)) throw ConfigError("outcome interval must satisfy lo < hi");
    const Eigen::Index K = grid.bins();
    int first = -1, last = -1;
    for (Eigen::Index k = 0; k < K; ++k) {
        if (grid.edges(k + 1) > lo && grid.edges(k) < hi) {
            if (first < 0) first = static_cast<int>(k);
            last = static_cast<int>(k);
        }
    }
    if (first < 0) throw ConfigError("outcome interval does not meet the grid");
    OutcomeSet set;
    set.ranges.emplace_back(first, last);
    set.widened = grid.edges(first) != lo || grid.edges(last + 1) != hi;
    return set;
}

std::vector<bool> OutcomeSet::mask(Eigen::Index bins) const
{
    std::vector<bool> m(static_cast<std::size_t>(bins), false);
    for (auto [a, b] : ranges) {
        if (b >= bins) throw ConfigError("outcome set bin index exceeds the grid's " + std::to_string(bins) + " bins");
        for (int k = a; k <= b; ++k) m[static_cast<std::size_t>(k)] = true;
    }
    return m;
}

std::string OutcomeSet::to_string() const
{
    std::ostringstream out;
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        if (i > 0) out << ";";
        out << ranges[i].first << "-" << ranges[i].second;
    }
    return out.str();
}

DmteBound dmte_from_probabilities(double pA1, double pA0, double alpha)
{
    DmteBound b;
    b.pA1 = pA1;
    b.pA0 = pA0;
    if (!(alpha > 0.0)) {
        b.lower = -std::numeric_limits<double>::infinity();
        b.upper = std::numeric_limits<double>::infinity();
        b.status = BoundStatus::Lost;
        return b;
    }
    const double hi = std::min(1.0, pA1 / alpha);
    // Rounding can push the lower expression past the upper one when pA1 = 1.
    const double lo = std::min(std::max(0.0, (pA1 - (1.0 - alpha)) / alpha), hi);
    b.lower = lo - pA0;
    b.upper = hi - pA0;
    b.status = alpha >= 1.0 ? BoundStatus::Identified : BoundStatus::Partial;
    return b;
}

DmteBound dmte_bounds(const ConditionalOutcomeTable& table, const OutcomeSet& set)
{
    if (!table.estimable) {
        DmteBound b;
        b.p = table.p;
        b.lower = b.upper = b.pA0 = b.pA1 = std::numeric_limits<double>::quiet_NaN();
        b.status = BoundStatus::NonEstimable;
        return b;
    }
    std::vector<bool> m = set.mask(table.grid.bins());
    double pA1 = 0.0, pA0 = 0.0;
    for (Eigen::Index k = 0; k < table.grid.bins(); ++k) {
        if (!m[static_cast<std::size_t>(k)]) continue;
        pA1 += table.f1(k);
        pA0 += table.f0(k);
    }
    pA1 = std::min(pA1, 1.0);
    pA0 = std::min(pA0, 1.0);
    DmteBound b = dmte_from_probabilities(pA1, pA0, table.alphaHat);
    b.p = table.p;
    return b;
}

}  // namespace mtebounds
