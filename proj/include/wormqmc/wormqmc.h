/* C interface to the wormqmc library. All strings are UTF-8 JSON unless
 * stated otherwise. Functions return a wqmc_status; on failure the message
 * is available from wqmc_last_error() on the calling thread. */
#ifndef WORMQMC_H
#define WORMQMC_H

#include <stdint.h>

#if defined(WQMC_BUILDING)
#define WQMC_API __attribute__((visibility("default")))
#else
#define WQMC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wqmc_status {
  WQMC_OK = 0,
  WQMC_ERR_USAGE = 1,
  WQMC_ERR_PARSE = 2,
  WQMC_ERR_VALIDATION = 3,
  WQMC_ERR_CAP = 4,
  WQMC_ERR_ESTIMATOR = 5,
  WQMC_ERR_VERIFY_FAILED = 6,
  WQMC_ERR_INTERNAL = 7
} wqmc_status;

typedef struct wqmc_hamiltonian wqmc_hamiltonian;
typedef struct wqmc_document wqmc_document;

/* Knobs for wqmc_estimate. Negative / zero sentinels mean "default". */
typedef struct wqmc_options {
  double beta;
  double eps;
  uint64_t seed;
  int trotter;          /* 0: choose from c_L */
  double c_L;           /* <= 0: default */
  double c_S;           /* <= 0: default */
  uint64_t samples;     /* 0: sample budget formula */
  int64_t burnin;       /* < 0: 20 M */
  int64_t thinning;     /* <= 0: M */
  double laziness;      /* < 0: 1/2 */
  int chains;           /* <= 0: 1 */
  int allow_small_beta; /* nonzero permits beta < 1 */
  int reproducible;     /* nonzero writes runtime_seconds as null */
} wqmc_options;

WQMC_API void wqmc_options_init(wqmc_options* opts);

WQMC_API const char* wqmc_version(void);
WQMC_API const char* wqmc_last_error(void);
WQMC_API const char* wqmc_status_name(int status);

WQMC_API int wqmc_hamiltonian_parse(const char* json_text, wqmc_hamiltonian** out);
WQMC_API int wqmc_hamiltonian_load(const char* path, wqmc_hamiltonian** out);
WQMC_API void wqmc_hamiltonian_free(wqmc_hamiltonian* h);
WQMC_API int wqmc_hamiltonian_qubits(const wqmc_hamiltonian* h);
WQMC_API double wqmc_hamiltonian_norm_bound(const wqmc_hamiltonian* h);

/* Validation report document; returns WQMC_ERR_VALIDATION if invalid. */
WQMC_API int wqmc_validate(const wqmc_hamiltonian* h, wqmc_document** report);

/* Partition-function estimate for h. *out receives the result document
 * even on estimator failure (with an "error" block) when non-NULL. */
WQMC_API int wqmc_estimate(const wqmc_hamiltonian* h, const wqmc_options* opts, wqmc_document** out);

/* Runs a manifest document: {"command": "estimate" | "verify" | "diagnose"
 * | "schedule", "input": path, ...}. Returns the command's exit code. */
WQMC_API int wqmc_run(const char* manifest_json, wqmc_document** out);

/* Dense Tr exp(-beta H) for small n (oracle). */
WQMC_API int wqmc_exact_z(const wqmc_hamiltonian* h, double beta, double* out);

WQMC_API const char* wqmc_document_text(const wqmc_document* doc);
WQMC_API void wqmc_document_free(wqmc_document* doc);

#ifdef __cplusplus
}
#endif

#endif
