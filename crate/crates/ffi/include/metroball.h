#ifndef METROBALL_H
#define METROBALL_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result codes. `MB_STATUS_OK` is zero; library errors map one to one onto the
// core error kinds.
typedef enum MbStatus {
  MB_STATUS_OK = 0,
  MB_STATUS_NULL_POINTER = 1,
  MB_STATUS_INVALID_UTF8 = 2,
  MB_STATUS_PANIC = 3,
  MB_STATUS_INVALID_DIMENSION = 10,
  MB_STATUS_DOMAIN = 11,
  MB_STATUS_INVALID_ARGUMENT = 12,
  MB_STATUS_PACKING_FAILURE = 13,
  MB_STATUS_INVALID_PRIOR = 14,
  MB_STATUS_INVALID_CLASS = 15,
  MB_STATUS_INVALID_PACKING = 16,
  MB_STATUS_NOT_FOUND = 17,
  MB_STATUS_INVALID_STATE = 18,
  MB_STATUS_INVALID_DENSITY = 19,
  MB_STATUS_NEEDS_REFERENCE = 20,
  MB_STATUS_DISCRETIZATION = 21,
  MB_STATUS_NUMERIC_FAILURE = 22,
  MB_STATUS_SIZE_LIMIT = 23,
  MB_STATUS_PROPERTY_VIOLATION = 24,
} MbStatus;

typedef enum MbEstimator {
  MB_ESTIMATOR_SIMPLE = 0,
  MB_ESTIMATOR_METROPOLIS = 1,
} MbEstimator;

typedef enum MbConductanceMode {
  MB_CONDUCTANCE_MODE_EXHAUSTIVE = 0,
  MB_CONDUCTANCE_MODE_CONTIGUOUS = 1,
} MbConductanceMode;

// Opaque finite reversible Markov chain.
typedef struct MbChain MbChain;

// Opaque problem instance.
typedef struct MbInstance MbInstance;

typedef struct MbSpectralReport {
  size_t states;
  double beta;
  double lambda;
  double conductance;
  bool cheeger_ok;
} MbSpectralReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *mb_version(void);

// Message for the most recent failure on this thread, or null. Valid until
// the next failing call on the same thread.
const char *mb_last_error(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void mb_string_free(char *s);

// # Safety
// `out` must be valid for writes.
enum MbStatus mb_vol_unit_ball(size_t d, double *out_value);

// `min(1/sqrt(d+1), 1/alpha)`.
//
// # Safety
// `out` must be valid for writes.
enum MbStatus mb_delta_star(size_t d, double alpha, double *out_value);

// Evaluates a named bound. `keys[i]` names the parameter `values[i]`.
//
// # Safety
// `name` and each `keys[i]` must be NUL-terminated; `keys` and `values`
// must hold `count` elements.
enum MbStatus mb_bound_evaluate(const char *name,
                                const char *const *keys,
                                const double *values,
                                size_t count,
                                double *out_value);

// Ratio-bounded hard instance drawn from the prior with `RngStream(seed, stream)`.
//
// # Safety
// `out` must be valid for writes.
enum MbStatus mb_instance_fc_sample(size_t n,
                                    double c,
                                    uint64_t seed,
                                    uint64_t stream,
                                    struct MbInstance **out_handle);

// Ratio-bounded hard instance with explicit cells and signs (`+1`/`-1`).
//
// # Safety
// `cells` and `eps` must hold `len` elements; `out` must be valid for writes.
enum MbStatus mb_instance_fc(size_t n,
                             double c,
                             const size_t *cells,
                             const int8_t *eps,
                             size_t len,
                             struct MbInstance **out_handle);

// Bump instance `index` with sign `sign` on a packing of `m` balls in `B^d`.
//
// # Safety
// `out` must be valid for writes.
enum MbStatus mb_instance_fad(double alpha,
                              size_t m,
                              size_t d,
                              size_t index,
                              int8_t sign,
                              struct MbInstance **out_handle);

// One of `constant-density`, `linear-f`, `gaussian-like`.
//
// # Safety
// `name` must be NUL-terminated; `out` must be valid for writes.
enum MbStatus mb_instance_smooth(const char *name, struct MbInstance **out_handle);

// # Safety
// `out` must be valid for writes.
enum MbStatus mb_instance_tilted(double alpha, struct MbInstance **out_handle);

// # Safety
// `json` must be NUL-terminated; `out` must be valid for writes.
enum MbStatus mb_instance_from_json(const char *json, struct MbInstance **out_handle);

// Serialized instance; release with [`mb_string_free`].
//
// # Safety
// `inst` must be a live handle; `out` must be valid for writes.
enum MbStatus mb_instance_to_json(const struct MbInstance *inst, char **out_json);

// # Safety
// `inst` must be a live handle; `out` must be valid for writes.
enum MbStatus mb_instance_dim(const struct MbInstance *inst, size_t *out_dim);

// Reference value; `MB_STATUS_NEEDS_REFERENCE` when the instance has none.
//
// # Safety
// `inst` must be a live handle; `out` must be valid for writes.
enum MbStatus mb_instance_truth(const struct MbInstance *inst, double *out_value);

// # Safety
// `inst` must come from this library and not have been freed. Null is ignored.
void mb_instance_free(struct MbInstance *inst);

// One estimate with `RngStream(seed, stream)`. `delta` is ignored by the
// simple estimator.
//
// # Safety
// `inst` must be a live handle; `out` must be valid for writes.
enum MbStatus mb_estimate(const struct MbInstance *inst,
                          enum MbEstimator kind,
                          size_t n,
                          double delta,
                          uint64_t seed,
                          uint64_t stream,
                          double *out_value);

// Root mean squared error over `replications` runs on streams `0..replications`.
//
// # Safety
// `inst` must be a live handle; `out` must be valid for writes.
enum MbStatus mb_measure_rmse(const struct MbInstance *inst,
                              enum MbEstimator kind,
                              size_t n,
                              double delta,
                              size_t replications,
                              uint64_t seed,
                              double *out_rmse);

// Chain from a row-major `states × states` kernel and stationary vector.
//
// # Safety
// `kernel` must hold `states * states` values and `pi` `states` values;
// `out` must be valid for writes.
enum MbStatus mb_chain_new(const double *kernel,
                           const double *pi,
                           size_t states,
                           struct MbChain **out_handle);

// Discretized ball walk on `[-1, 1]` targeting `exp(-alpha x)`.
//
// # Safety
// `out` must be valid for writes.
enum MbStatus mb_chain_discretize_tilt(double alpha,
                                       double delta,
                                       size_t states,
                                       struct MbChain **out_handle);

// # Safety
// `chain` must come from this library and not have been freed. Null is ignored.
void mb_chain_free(struct MbChain *chain);

// # Safety
// `c` must be a live handle; `out` must be valid for writes.
enum MbStatus mb_chain_states(const struct MbChain *c, size_t *out_states);

// # Safety
// `c` must be a live handle; `out` must be valid for writes.
enum MbStatus mb_chain_second_eigenvalue(const struct MbChain *c, double *out_value);

// # Safety
// `c` must be a live handle; `out` must be valid for writes.
enum MbStatus mb_chain_conductance(const struct MbChain *c,
                                   enum MbConductanceMode mode,
                                   double *out_value);

// Second eigenvalue, gap, conductance and the Cheeger check in one call.
//
// # Safety
// `c` must be a live handle; `out` must be valid for writes.
enum MbStatus mb_chain_spectral_report(const struct MbChain *c,
                                       enum MbConductanceMode mode,
                                       struct MbSpectralReport *out_report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* METROBALL_H */
