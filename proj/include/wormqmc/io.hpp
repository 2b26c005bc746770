#pragma once

#include <string>

#include <json.hpp>

#include "wormqmc/diagnostics.hpp"
#include "wormqmc/estimator.hpp"
#include "wormqmc/hamiltonian.hpp"

namespace wormqmc {

inline constexpr const char* kToolName = "wormqmc";
inline constexpr const char* kToolVersion = "0.1.0";

using json = nlohmann::ordered_json;

/// {"n": 2, "pairs": [{"i": 0, "j": 1, "a": 0.5, "b": 0.25}],
///  "fields": [{"i": 0, "d": 0.3}]}
/// Throws ParseError naming the offending field. Coefficient ranges are
/// checked by validate(), not here.
XYHamiltonian parse_hamiltonian(const std::string& text);
XYHamiltonian hamiltonian_from_json(const json& doc);
XYHamiltonian load_hamiltonian(const std::string& path);
json hamiltonian_to_json(const XYHamiltonian& h);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

json to_json(const ValidationReport& r);
json to_json(const SectorRatioReport& r);
json to_json(const EstimatorSchedule& s);
json to_json(const RatioEstimate& r);
/// The result block; runtime is left to the caller.
json to_json(const EstimateResult& r);
json to_json(const EstimatorParams& p);

/// Non-finite doubles become null (JSON has no infinities).
json number(double x);

}  // namespace wormqmc
