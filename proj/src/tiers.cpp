#include "mtebounds/tiers.hpp"

#include "mtebounds/errors.hpp"

namespace mtebounds {

std::string to_string(Tier tier)
{
    switch (tier) {
    case Tier::NoRestriction: return "no-restriction";
    case Tier::Monotone: return "monotone";
    case Tier::MonotonePlusDominance: return "monotone-dominance";
    case Tier::NoSelectionEffect: return "no-selection";
    }
    return "unknown";
}

std::string to_string(BoundStatus status)
{
    switch (status) {
    case BoundStatus::Identified: return "identified";
    case BoundStatus::Partial: return "partial";
    case BoundStatus::Lost: return "lost";
    case BoundStatus::NonEstimable: return "nonestimable";
    }
    return "unknown";
}

Tier parse_tier(const std::string& name)
{
    if (name == "no-restriction" || name == "1") return Tier::NoRestriction;
    if (name == "monotone" || name == "2") return Tier::Monotone;
    if (name == "monotone-dominance" || name == "3") return Tier::MonotonePlusDominance;
    if (name == "no-selection" || name == "0") return Tier::NoSelectionEffect;
    throw ConfigError("unknown tier '" + name +
                      "' (expected no-restriction, monotone, monotone-dominance or no-selection)");
}

}  // namespace mtebounds
