#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "foamck/gck.hpp"
#include "foamck/nets.hpp"

namespace foamck {

using json = nlohmann::ordered_json;

json point_json(const Point& x);
json box_json(const Box& b);
json index_json(const Index& i);

json solution_json(const GlobalSolution& sol);
json verdict_json(const MembershipVerdict& v);
json residual_json(const ResidualReport& r);
json sigma_json(const SingularitySet& s);

/// "frozen" under a frozen clock, otherwise the current UTC time.
std::string timestamp(bool frozen);

/// Writes through a temporary file and renames it into place.
void write_atomic(const std::string& path, const std::string& content);

/// Rows x..., psi, oracle (when present), residual.
void write_samples_csv(std::ostream& os, const GlobalSolution& sol, const std::vector<Point>& grid);

}  // namespace foamck
