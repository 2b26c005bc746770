#include "wormqmc/wormqmc.h"

#include <new>
#include <string>

#include "wormqmc/commands.hpp"
#include "wormqmc/errors.hpp"
#include "wormqmc/oracle.hpp"

struct wqmc_hamiltonian {
  wormqmc::XYHamiltonian h;
};

struct wqmc_document {
  std::string text;
};

namespace {

thread_local std::string g_last_error;

int fail(int code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <class F>
int guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const std::bad_alloc&) {
    return fail(WQMC_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(wormqmc::exit_code_for(e), e.what());
  } catch (...) {
    return fail(WQMC_ERR_INTERNAL, "unknown exception");
  }
}

wqmc_document* make_doc(const wormqmc::json& j) { return new wqmc_document{j.dump(2) + "\n"}; }

int finish(const wormqmc::CommandOutcome& o, wqmc_document** out) {
  if (out) *out = make_doc(o.document);
  if (o.exit_code != 0) {
    const auto& d = o.document;
    if (d.contains("error")) return fail(o.exit_code, d["error"]["message"].get<std::string>());
    return fail(o.exit_code, wormqmc::exit_code_name(o.exit_code));
  }
  return WQMC_OK;
}

}  // namespace

extern "C" {

void wqmc_options_init(wqmc_options* o) {
  if (!o) return;
  o->beta = 1.0;
  o->eps = 0.1;
  o->seed = 0;
  o->trotter = 0;
  o->c_L = 0.0;
  o->c_S = 0.0;
  o->samples = 0;
  o->burnin = -1;
  o->thinning = 0;
  o->laziness = -1.0;
  o->chains = 0;
  o->allow_small_beta = 0;
  o->reproducible = 0;
}

const char* wqmc_version(void) { return wormqmc::kToolVersion; }

const char* wqmc_last_error(void) { return g_last_error.c_str(); }

const char* wqmc_status_name(int status) { return wormqmc::exit_code_name(status); }

int wqmc_hamiltonian_parse(const char* text, wqmc_hamiltonian** out) {
  if (!text || !out) return fail(WQMC_ERR_USAGE, "null argument");
  return guarded([&] {
    *out = new wqmc_hamiltonian{wormqmc::parse_hamiltonian(text)};
    return WQMC_OK;
  });
}

int wqmc_hamiltonian_load(const char* path, wqmc_hamiltonian** out) {
  if (!path || !out) return fail(WQMC_ERR_USAGE, "null argument");
  return guarded([&] {
    *out = new wqmc_hamiltonian{wormqmc::load_hamiltonian(path)};
    return WQMC_OK;
  });
}

void wqmc_hamiltonian_free(wqmc_hamiltonian* h) { delete h; }

int wqmc_hamiltonian_qubits(const wqmc_hamiltonian* h) { return h ? h->h.n : -1; }

double wqmc_hamiltonian_norm_bound(const wqmc_hamiltonian* h) { return h ? h->h.norm_bound() : -1.0; }

int wqmc_validate(const wqmc_hamiltonian* h, wqmc_document** report) {
  if (!h) return fail(WQMC_ERR_USAGE, "null argument");
  return guarded([&] {
    const auto r = wormqmc::validate(h->h);
    if (report) *report = make_doc(wormqmc::to_json(r));
    if (!r.ok()) return fail(WQMC_ERR_VALIDATION, r.violations.front());
    return static_cast<int>(WQMC_OK);
  });
}

int wqmc_estimate(const wqmc_hamiltonian* h, const wqmc_options* o, wqmc_document** out) {
  if (!h) return fail(WQMC_ERR_USAGE, "null argument");
  return guarded([&] {
    wqmc_options defaults;
    wqmc_options_init(&defaults);
    if (!o) o = &defaults;
    wormqmc::RunManifest m;
    m.command = "estimate";
    m.beta = o->beta;
    m.eps = o->eps;
    m.seed = o->seed;
    if (o->trotter > 0) m.L = o->trotter;
    if (o->c_L > 0) m.c_L = o->c_L;
    if (o->c_S > 0) m.c_S = o->c_S;
    if (o->samples > 0) m.S = o->samples;
    if (o->burnin >= 0) m.burnin = o->burnin;
    if (o->thinning > 0) m.thinning = o->thinning;
    if (o->laziness >= 0) m.laziness = o->laziness;
    if (o->chains > 0) m.chains = o->chains;
    m.allow_small_beta = o->allow_small_beta != 0;
    m.reproducible = o->reproducible != 0;
    return finish(wormqmc::run_command(m, h->h), out);
  });
}

int wqmc_run(const char* manifest_json, wqmc_document** out) {
  if (!manifest_json) return fail(WQMC_ERR_USAGE, "null argument");
  return guarded([&] {
    wormqmc::json doc;
    try {
      doc = wormqmc::json::parse(manifest_json);
    } catch (const wormqmc::json::parse_error& e) {
      throw wormqmc::ParseError(std::string("manifest: malformed JSON: ") + e.what());
    }
    return finish(wormqmc::run_command(wormqmc::manifest_from_json(doc)), out);
  });
}

int wqmc_exact_z(const wqmc_hamiltonian* h, double beta, double* out) {
  if (!h || !out) return fail(WQMC_ERR_USAGE, "null argument");
  return guarded([&] {
    *out = wormqmc::oracle::exact_Z(h->h, beta);
    return WQMC_OK;
  });
}

const char* wqmc_document_text(const wqmc_document* doc) { return doc ? doc->text.c_str() : ""; }

void wqmc_document_free(wqmc_document* doc) { delete doc; }

}  // extern "C"
