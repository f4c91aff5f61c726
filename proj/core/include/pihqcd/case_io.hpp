#pragma once

#include <string>

#include "pihqcd/grid.hpp"

namespace pihqcd {

/// Loads a case file (JSON; MW/MWh units, per-unit reactance) and validates
/// every invariant. Throws CaseError on parse or validation failure.
GridCase load_case(const std::string& path);

GridCase parse_case(const std::string& text, const std::string& origin = "<string>");

void save_case(const GridCase& c, const std::string& path);

std::string case_to_json(const GridCase& c);

}  // namespace pihqcd
