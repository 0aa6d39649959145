#pragma once

#include <iosfwd>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "obsent/classical.hpp"
#include "obsent/thermo.hpp"

namespace obsent::io {

using nlohmann::json;

// Matrix files: {"dim": n, "re": [[...]], "im": [[...]]}, row-major.
json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);

json label_to_json(const Label& label);
Label label_from_json(const json& j);

// Coarse-graining files: {"dim": n, "elements": [matrix...], "labels": [...]}
// with an optional "kind": "projective" (default) or "kraus".
MeasurementSequence::Step step_from_json(const json& j);
json coarse_graining_to_json(const CoarseGraining& cg);

// Classical files: {"points": [...], "weights": [...], "density": [...]} and
// {"cells": [[indices...], ...], "labels": [...]}.
ClassicalSpace classical_space_from_json(const json& j);
ClassicalCoarseGraining classical_cg_from_json(const json& j);

QuenchScenario scenario_from_json(const json& j);
json scenario_to_json(const QuenchScenario& scenario);

json distribution_to_json(const MacrostateDistribution& dist);

// Parses a file into json, mapping read/parse failures onto ParseError.
json load_json(const std::string& path);
void save_json(const std::string& path, const json& j);

QuantumState load_state(const std::string& path);
Observable load_observable(const std::string& path);
MeasurementSequence::Step load_step(const std::string& path);
ClassicalSpace load_classical_space(const std::string& path);
ClassicalCoarseGraining load_classical_cg(const std::string& path);
QuenchScenario load_scenario(const std::string& path);

// Full-precision decimal form that reparses to the same double.
std::string format_double(double v);
void write_quench_csv(std::ostream& os, const QuenchResult& result);
json quench_metadata(const QuenchScenario& scenario, const LatticeModel& model,
                     const QuenchResult& result);

}  // namespace obsent::io
