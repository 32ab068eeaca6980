#pragma once

// CSV and JSON export. Numbers are written in shortest round-trip form, so
// identical runs give byte-identical files.

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "mflqr/gains.hpp"
#include "mflqr/sim.hpp"

namespace mflqr {

std::string format_double(double v);

// Row-major nested arrays.
nlohmann::json to_json(const MatrixXd& m);

nlohmann::json to_json(const GainSchedule& g);
nlohmann::json to_json(const ConsensusForm& form);
nlohmann::json to_json(const ValidationReport& report);
nlohmann::json to_json(const SimulationTrace& trace);

// t,x0_1..x0_dx,u0_1..u0_du,xbar_1..xbar_dx,mean_abs_dev,stage_cost
// with one row per t = 1..T.
void write_trace_csv(std::ostream& out, const SimulationTrace& trace);

// Wide per-follower table: t,x0_*,xbar_*,x<i>_<k> for every follower i.
void write_followers_csv(std::ostream& out, const SimulationTrace& trace);

}  // namespace mflqr
