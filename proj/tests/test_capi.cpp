#include <doctest.h>

#include <cmath>
#include <string>

#include "wormqmc/wormqmc.h"

namespace {

const char* kField = R"({"n": 1, "fields": [{"i": 0, "d": 1.0}]})";

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(wqmc_version()) == "0.1.0");
  CHECK(std::string(wqmc_status_name(WQMC_OK)).size() > 0);
  CHECK(std::string(wqmc_status_name(WQMC_ERR_CAP)) != wqmc_status_name(WQMC_OK));
}

TEST_CASE("Hamiltonian handles") {
  wqmc_hamiltonian* h = nullptr;
  REQUIRE(wqmc_hamiltonian_parse(kField, &h) == WQMC_OK);
  CHECK(wqmc_hamiltonian_qubits(h) == 1);
  CHECK(wqmc_hamiltonian_norm_bound(h) == 1.0);
  double z = 0.0;
  CHECK(wqmc_exact_z(h, 1.0, &z) == WQMC_OK);
  CHECK(z == doctest::Approx(2.0 * std::cosh(1.0)));
  wqmc_document* report = nullptr;
  CHECK(wqmc_validate(h, &report) == WQMC_OK);
  CHECK(std::string(wqmc_document_text(report)).find("\"ok\": true") != std::string::npos);
  wqmc_document_free(report);
  wqmc_hamiltonian_free(h);

  CHECK(wqmc_hamiltonian_qubits(nullptr) == -1);
  CHECK(wqmc_hamiltonian_parse(nullptr, &h) == WQMC_ERR_USAGE);
  wqmc_hamiltonian_free(nullptr);
  wqmc_document_free(nullptr);
}

TEST_CASE("errors set the thread's last error") {
  wqmc_hamiltonian* h = nullptr;
  CHECK(wqmc_hamiltonian_parse("{\"n\": 1, \"fields\": [{\"i\": 0}]}", &h) == WQMC_ERR_PARSE);
  CHECK(std::string(wqmc_last_error()).find("fields[0].d") != std::string::npos);
  CHECK(wqmc_hamiltonian_load("/nonexistent.json", &h) == WQMC_ERR_PARSE);

  REQUIRE(wqmc_hamiltonian_parse(R"({"n": 1, "fields": [{"i": 0, "d": 2.0}]})", &h) == WQMC_OK);
  wqmc_document* report = nullptr;
  CHECK(wqmc_validate(h, &report) == WQMC_ERR_VALIDATION);
  CHECK(std::string(wqmc_last_error()).find("|d| > 1") != std::string::npos);
  wqmc_document_free(report);
  wqmc_hamiltonian_free(h);
}

TEST_CASE("estimate through the C API") {
  wqmc_hamiltonian* h = nullptr;
  REQUIRE(wqmc_hamiltonian_parse(kField, &h) == WQMC_OK);
  wqmc_options o;
  wqmc_options_init(&o);
  o.seed = 4;
  o.c_L = 1.0;
  o.samples = 2000;
  o.reproducible = 1;
  wqmc_document* a = nullptr;
  wqmc_document* b = nullptr;
  CHECK(wqmc_estimate(h, &o, &a) == WQMC_OK);
  CHECK(wqmc_estimate(h, &o, &b) == WQMC_OK);
  const std::string ta = wqmc_document_text(a);
  CHECK(ta == wqmc_document_text(b));
  CHECK(ta.find("\"log_Z\"") != std::string::npos);
  wqmc_document_free(a);
  wqmc_document_free(b);

  o.beta = 0.5;
  wqmc_document* c = nullptr;
  CHECK(wqmc_estimate(h, &o, &c) == WQMC_ERR_VALIDATION);
  CHECK(std::string(wqmc_document_text(c)).find("\"error\"") != std::string::npos);
  wqmc_document_free(c);
  wqmc_hamiltonian_free(h);
}

TEST_CASE("manifest runs") {
  wqmc_document* d = nullptr;
  CHECK(wqmc_run("{\"command\": \"schedule\", \"n\": 2, \"h_norm\": 0.75, \"reproducible\": true}", &d) == WQMC_OK);
  CHECK(std::string(wqmc_document_text(d)).find("\"S\"") != std::string::npos);
  wqmc_document_free(d);
  CHECK(wqmc_run("{not json", nullptr) == WQMC_ERR_PARSE);
  CHECK(wqmc_run("{\"command\": \"schedule\", \"bogus\": 1}", nullptr) == WQMC_ERR_PARSE);
  CHECK(wqmc_run(nullptr, nullptr) == WQMC_ERR_USAGE);
}
