#include "wormqmc/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "wormqmc/errors.hpp"

namespace wormqmc {

namespace {

const json& field(const json& obj, const std::string& key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + key + ": missing");
  return *it;
}

double get_number(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_number()) throw ParseError(where + key + ": expected a number, got " + std::string(v.type_name()));
  return v.get<double>();
}

int get_index(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_number_integer()) throw ParseError(where + key + ": expected an integer, got " + std::string(v.type_name()));
  const auto x = v.get<long long>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    throw ParseError(where + key + ": integer out of range");
  return static_cast<int>(x);
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [k, v] : obj.items()) {
    bool ok = false;
    for (const char* name : known) ok = ok || k == name;
    if (!ok) throw ParseError(where + k + ": unknown field");
  }
}

}  // namespace

XYHamiltonian hamiltonian_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("document: expected an object");
  reject_unknown(doc, {"n", "pairs", "fields", "name", "comment"}, "");
  XYHamiltonian h;
  h.n = get_index(doc, "n", "");
  if (doc.contains("pairs")) {
    const auto& arr = doc["pairs"];
    if (!arr.is_array()) throw ParseError("pairs: expected an array");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const std::string where = "pairs[" + std::to_string(k) + "].";
      if (!arr[k].is_object()) throw ParseError("pairs[" + std::to_string(k) + "]: expected an object");
      reject_unknown(arr[k], {"i", "j", "a", "b"}, where);
      PairTerm p;
      p.i = get_index(arr[k], "i", where);
      p.j = get_index(arr[k], "j", where);
      p.a = get_number(arr[k], "a", where);
      p.b = arr[k].contains("b") ? get_number(arr[k], "b", where) : 0.0;
      h.pairs.push_back(p);
    }
  }
  if (doc.contains("fields")) {
    const auto& arr = doc["fields"];
    if (!arr.is_array()) throw ParseError("fields: expected an array");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const std::string where = "fields[" + std::to_string(k) + "].";
      if (!arr[k].is_object()) throw ParseError("fields[" + std::to_string(k) + "]: expected an object");
      reject_unknown(arr[k], {"i", "d"}, where);
      FieldTerm f;
      f.i = get_index(arr[k], "i", where);
      f.d = get_number(arr[k], "d", where);
      h.fields.push_back(f);
    }
  }
  return h;
}

XYHamiltonian parse_hamiltonian(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  return hamiltonian_from_json(doc);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error("write to " + path + " failed");
}

XYHamiltonian load_hamiltonian(const std::string& path) {
  try {
    return parse_hamiltonian(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

json hamiltonian_to_json(const XYHamiltonian& h) {
  json doc;
  doc["n"] = h.n;
  doc["pairs"] = json::array();
  for (const auto& p : h.pairs) doc["pairs"].push_back({{"i", p.i}, {"j", p.j}, {"a", p.a}, {"b", p.b}});
  doc["fields"] = json::array();
  for (const auto& f : h.fields) doc["fields"].push_back({{"i", f.i}, {"d", f.d}});
  return doc;
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json to_json(const ValidationReport& r) {
  return {{"ok", r.ok()}, {"violations", r.violations}, {"warnings", r.warnings}};
}

json to_json(const SectorRatioReport& r) {
  return {{"c0_visits", r.c0_visits},
          {"c2_visits", r.c2_visits},
          {"ratio", number(r.ratio)},
          {"interval", {number(r.lower), number(r.upper)}},
          {"effective_samples", r.effective_samples},
          {"M", r.M},
          {"anomaly_multiple", r.anomaly_multiple},
          {"anomaly", r.anomaly}};
}

json to_json(const EstimatorSchedule& s) {
  return {{"L", s.L},           {"M", s.M},
          {"H_norm", s.H_norm}, {"k", s.k},
          {"beta_grid", s.beta_grid}, {"S", s.S},
          {"burnin", s.burnin}, {"thinning", s.thinning},
          {"patience", s.patience}};
}

json to_json(const RatioEstimate& r) {
  return {{"beta_lo", r.beta_lo},
          {"beta_hi", r.beta_hi},
          {"method", step_method_name(r.method)},
          {"mean", r.mean},
          {"se", r.se},
          {"samples", r.samples},
          {"c2_fraction", r.c2_fraction},
          {"c2_skips", r.c2_skips},
          {"c0_visits", r.c0_visits},
          {"c2_visits", r.c2_visits},
          {"steps", r.steps},
          {"tau_int", r.tau_int},
          {"tau_log_weight", r.tau_log_weight},
          {"burnin", r.burnin},
          {"adaptive_burnin", r.adaptive_burnin},
          {"burnin_sufficient", r.burnin >= r.adaptive_burnin}};
}

json to_json(const EstimateResult& r) {
  json steps = json::array();
  for (const auto& s : r.steps) steps.push_back(to_json(s));
  return {{"log_Z", r.log_Z},
          {"log_Z_se", r.log_Z_se},
          {"Z", number(std::exp(r.log_Z))},
          {"n", r.n},
          {"beta", r.beta},
          {"eps", r.eps},
          {"L", r.schedule.L},
          {"k", r.schedule.k},
          {"S", r.schedule.S},
          {"seed", r.seed},
          {"total_samples", r.total_samples},
          {"schedule", to_json(r.schedule)},
          {"per_step", steps},
          {"sector", to_json(r.sector)}};
}

json to_json(const EstimatorParams& p) {
  return {{"c_L", p.c_L},
          {"L", p.L},
          {"c_S", p.c_S},
          {"S", p.S},
          {"fail_prob", p.fail_prob},
          {"statistical_share", p.statistical_share},
          {"burnin", p.burnin},
          {"thinning", p.thinning},
          {"patience", p.patience},
          {"laziness", p.laziness},
          {"chains", p.chains},
          {"seed", p.seed},
          {"median_groups", p.median_groups},
          {"allow_small_beta", p.allow_small_beta},
          {"rigorous_burnin", p.rigorous_burnin},
          {"rigorous_constant", p.rigorous_constant}};
}

}  // namespace wormqmc
