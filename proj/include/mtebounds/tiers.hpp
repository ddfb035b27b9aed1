#pragma once

#include <string>

namespace mtebounds {

// Assumption sets, from weakest to strongest restriction on selection.
enum class Tier { NoRestriction, Monotone, MonotonePlusDominance, NoSelectionEffect };

enum class Tail { Lower, Upper };

enum class BoundStatus { Identified, Partial, Lost, NonEstimable };

std::string to_string(Tier tier);
std::string to_string(BoundStatus status);
Tier parse_tier(const std::string& name);

}  // namespace mtebounds
