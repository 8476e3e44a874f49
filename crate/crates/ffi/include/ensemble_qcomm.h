#ifndef ENSEMBLE_QCOMM_H
#define ENSEMBLE_QCOMM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EqcStatus {
  EQC_STATUS_OK = 0,
  EQC_STATUS_INVALID_ARGUMENT = 1,
  EQC_STATUS_NUMERICAL_DEGENERACY = 2,
  EQC_STATUS_INTERNAL = 3,
  EQC_STATUS_NULL_POINTER = 4,
  EQC_STATUS_BUFFER_TOO_SMALL = 5,
  EQC_STATUS_PANIC = 6,
} EqcStatus;

/**
 * Opaque Gaussian state handle.
 */
typedef struct EqcState EqcState;

typedef struct EqcChannel {
  double kappa;
  double eps_p;
  double eps_a;
} EqcChannel;

/**
 * Physical parameters in SI units. `coupling_is_dipole != 0` means
 * `coupling` holds a transition dipole moment (C m) rather than g.
 */
typedef struct EqcPhysicalParams {
  double lambda0;
  double area;
  double length;
  double density;
  double detuning;
  double gamma;
  double gamma_prime;
  double n_photons;
  double n_atoms;
  double pulse_duration;
  double coupling;
  int32_t coupling_is_dipole;
} EqcPhysicalParams;

typedef struct EqcNoise {
  double eps_p;
  double eps_a;
  double eta_t;
  double eta_d;
  double local_eta_t;
} EqcNoise;

/**
 * Results of an entanglement or teleportation run. Fidelities are NaN for
 * entanglement-only runs.
 */
typedef struct EqcRunSummary {
  double r;
  double epr_x;
  double epr_p;
  double fidelity;
  double conditional_fidelity;
} EqcRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread; empty after success.
 * Valid until the next call into this library from the same thread.
 */
const char *eqc_last_error(void);

/**
 * Library version as a NUL-terminated string.
 */
const char *eqc_version(void);

/**
 * Creates the vacuum on `n_modes` modes.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum EqcStatus eqc_state_vacuum(uintptr_t n_modes, struct EqcState **out);

/**
 * Copies a state.
 *
 * # Safety
 * `state` must be a live handle and `out` writable.
 */
enum EqcStatus eqc_state_clone(const struct EqcState *state, struct EqcState **out);

/**
 * Releases a state. Null is ignored.
 *
 * # Safety
 * `state` must be null or a handle not yet freed.
 */
void eqc_state_free(struct EqcState *state);

/**
 * Number of modes; zero for a null handle.
 *
 * # Safety
 * `state` must be null or a live handle.
 */
uintptr_t eqc_state_n_modes(const struct EqcState *state);

/**
 * # Safety
 * `state` must be a live handle.
 */
enum EqcStatus eqc_state_displace(struct EqcState *state, uintptr_t mode, double dx, double dp);

/**
 * # Safety
 * `state` must be a live handle.
 */
enum EqcStatus eqc_state_rotate(struct EqcState *state, uintptr_t mode, double theta);

/**
 * Loss channel of strength `eps` in [0, 1] on one mode.
 *
 * # Safety
 * `state` must be a live handle.
 */
enum EqcStatus eqc_state_loss(struct EqcState *state, uintptr_t mode, double eps);

/**
 * One light pass through an ensemble: QND kick, then damping.
 *
 * # Safety
 * `state` must be a live handle and `c` a valid pointer.
 */
enum EqcStatus eqc_state_apply_pass(struct EqcState *state,
                                    uintptr_t light,
                                    uintptr_t atom,
                                    const struct EqcChannel *c);

/**
 * Homodyne detection with a given outcome. The measured mode is removed.
 * `quad` is 0 for X and 1 for P.
 *
 * # Safety
 * `state` must be a live handle.
 */
enum EqcStatus eqc_state_homodyne_forced(struct EqcState *state,
                                         uintptr_t mode,
                                         int32_t quad,
                                         double outcome);

/**
 * Homodyne detection with an outcome drawn from a generator seeded by `seed`.
 *
 * # Safety
 * `state` must be a live handle and `outcome` writable.
 */
enum EqcStatus eqc_state_homodyne_sampled(struct EqcState *state,
                                          uintptr_t mode,
                                          int32_t quad,
                                          uint64_t seed,
                                          double *outcome);

/**
 * Variance of `Σ coeffs[i] r_i` over the quadrature vector `r`; `len` must equal `2 n_modes`.
 *
 * # Safety
 * `coeffs` must point to `len` readable values and `out` be writable.
 */
enum EqcStatus eqc_state_variance(const struct EqcState *state,
                                  const double *coeffs,
                                  uintptr_t len,
                                  double *out);

/**
 * Overlap of one mode with the coherent state of mean `(x, p)`.
 *
 * # Safety
 * `state` must be a live handle and `out` writable.
 */
enum EqcStatus eqc_state_fidelity_coherent(const struct EqcState *state,
                                           uintptr_t mode,
                                           double x,
                                           double p,
                                           double *out);

/**
 * Minimum eigenvalue of the uncertainty matrix; non-negative for physical states.
 *
 * # Safety
 * `state` must be a live handle and `out` writable.
 */
enum EqcStatus eqc_state_heisenberg_min_eigenvalue(const struct EqcState *state, double *out);

/**
 * Copies the mean vector (`2 n_modes` values).
 *
 * # Safety
 * `buf` must point to `len` writable values.
 */
enum EqcStatus eqc_state_mean(const struct EqcState *state, double *buf, uintptr_t len);

/**
 * Copies the covariance matrix in row-major order (`(2 n_modes)^2` values).
 *
 * # Safety
 * `buf` must point to `len` writable values.
 */
enum EqcStatus eqc_state_cov(const struct EqcState *state, double *buf, uintptr_t len);

/**
 * Derives `(κ, ε_p, ε_a)` from physical parameters.
 *
 * # Safety
 * `params` must be readable and `out` writable.
 */
enum EqcStatus eqc_derive_channel(const struct EqcPhysicalParams *params, struct EqcChannel *out);

/**
 * `r = ½ ln(1 + 2κ²)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum EqcStatus eqc_squeezing_parameter(double kappa, double *out);

/**
 * Loss-free teleportation fidelity.
 *
 * # Safety
 * `out` must be writable.
 */
enum EqcStatus eqc_fidelity_ideal(double kappa, double *out);

/**
 * Approximate fidelity of the asymmetric scheme under transmission loss.
 *
 * # Safety
 * `out` must be writable.
 */
enum EqcStatus eqc_fidelity_lossy(double kappa2, double eta_t, double *out);

/**
 * `κ₂* = η_t^(-1/4)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum EqcStatus eqc_optimal_kappa2(double eta_t, double *out);

/**
 * `1 / (1 + √η_t)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum EqcStatus eqc_lossy_bound(double eta_t, double *out);

/**
 * Entangles two ensembles with rounds `(kappa1, kappa2)`. Outcomes are
 * sampled from a generator seeded by `seed`.
 *
 * # Safety
 * `noise` must be readable and `out` writable.
 */
enum EqcStatus eqc_entangle(double kappa1,
                            double kappa2,
                            const struct EqcNoise *noise,
                            uint64_t seed,
                            struct EqcRunSummary *out);

/**
 * Entangles, then teleports the coherent state `(input_x, input_p)` with
 * the calibrated gain. Uses `(kappa1, kappa2)` for entangling and the reverse
 * order for the local measurement.
 *
 * # Safety
 * `noise` must be readable and `out` writable.
 */
enum EqcStatus eqc_teleport(double kappa1,
                            double kappa2,
                            const struct EqcNoise *noise,
                            double input_x,
                            double input_p,
                            uint64_t seed,
                            struct EqcRunSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ENSEMBLE_QCOMM_H */
