#ifndef HHTX_H
#define HHTX_H

#include <stddef.h>
#include <stdint.h>

typedef enum HhtxStatus {
  HHTX_STATUS_OK = 0,
  HHTX_STATUS_NULL_POINTER = 1,
  HHTX_STATUS_INVALID_ARGUMENT = 2,
  // The test could not be carried out on these data.
  HHTX_STATUS_TEST_FAILURE = 3,
  HHTX_STATUS_PANIC = 4,
} HhtxStatus;

typedef enum HhtxAlternative {
  // Free `b`, `p1` and `p2`.
  HHTX_ALTERNATIVE_FULL = 0,
  // `p2` fixed at zero.
  HHTX_ALTERNATIVE_HOUSEHOLD_ONLY = 1,
} HhtxAlternative;

typedef enum HhtxMethod {
  HHTX_METHOD_SIMPLE = 0,
  HHTX_METHOD_REFINED = 1,
  HHTX_METHOD_ASYMPTOTIC = 2,
  HHTX_METHOD_DEGENERATE = 3,
} HhtxMethod;

typedef enum HhtxAdmissibility {
  HHTX_ADMISSIBILITY_NULL_ONLY = 0,
  HHTX_ADMISSIBILITY_FULL_ONLY = 1,
  HHTX_ADMISSIBILITY_BOTH = 2,
} HhtxAdmissibility;

// Opaque outbreak handle.
typedef struct HhtxOutbreak HhtxOutbreak;

typedef struct HhtxTestResult {
  // NaN when the null model cannot be fitted.
  double lambda;
  double p_value;
  enum HhtxMethod method;
  enum HhtxAdmissibility admissibility;
  size_t replicates;
  size_t exceedances;
  size_t failed_replicates;
  // Unrestricted estimates; NaN when unavailable.
  double b;
  double p1;
  double p2;
} HhtxTestResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *hhtx_last_error(void);

// Library version as a static NUL-terminated string.
const char *hhtx_version(void);

// Build an outbreak.
//
// `household_of[i]` is person `i`'s household label; labels must cover
// `0..H` without gaps. `onsets[i]` is the onset day, or 0 for never
// symptomatic. The latent and infectious distributions start at `*_min`
// days with one probability per day.
//
// # Safety
// Array arguments must point to the stated number of elements; `out`
// must be writable.
enum HhtxStatus hhtx_outbreak_new(const size_t *household_of,
                                  const uint32_t *onsets,
                                  size_t n_persons,
                                  uint32_t exposure_days,
                                  uint32_t horizon,
                                  uint32_t latent_min,
                                  const double *latent_pmf,
                                  size_t latent_len,
                                  uint32_t infectious_min,
                                  const double *infectious_pmf,
                                  size_t infectious_len,
                                  int censor_uninfected,
                                  struct HhtxOutbreak **out);

// Release an outbreak. NULL is ignored.
//
// # Safety
// `outbreak` must come from [`hhtx_outbreak_new`] and not be used again.
void hhtx_outbreak_free(struct HhtxOutbreak *outbreak);

// # Safety
// `outbreak` must be a live handle and `out` writable.
enum HhtxStatus hhtx_outbreak_num_cases(const struct HhtxOutbreak *outbreak, size_t *out);

// Likelihood ratio statistic for no person-to-person transmission.
//
// # Safety
// `outbreak` must be a live handle and `out` writable.
enum HhtxStatus hhtx_lrt(const struct HhtxOutbreak *outbreak,
                         enum HhtxAlternative alt,
                         double *out);

// Simple or refined permutation test. `method` must be `Simple` or
// `Refined`; `add_one` selects the (1 + k) / (1 + M) p-value.
//
// # Safety
// `outbreak` must be a live handle and `out` writable.
enum HhtxStatus hhtx_permutation_test(const struct HhtxOutbreak *outbreak,
                                      enum HhtxMethod method,
                                      size_t replicates,
                                      uint64_t seed,
                                      enum HhtxAlternative alt,
                                      int add_one,
                                      struct HhtxTestResult *out);

// Two-parameter test on data truncated at day S, referred to the
// `½χ²₀ + ½χ²₁` mixture.
//
// # Safety
// `outbreak` must be a live handle and `out` writable.
enum HhtxStatus hhtx_asymptotic_test(const struct HhtxOutbreak *outbreak,
                                     struct HhtxTestResult *out);

// Upper tail of `½χ²₀ + ½χ²₁`; 1 at `lambda <= 0`.
double hhtx_asymptotic_p_value(double lambda);

// Community probability of infection `1 - (1 - b)^S`.
double hhtx_cpi(double b, uint32_t exposure_days);

// Secondary attack rate for daily probability `p`.
//
// # Safety
// `pmf` must point to `len` probabilities and `out` be writable.
enum HhtxStatus hhtx_sar(double p,
                         uint32_t infectious_min,
                         const double *pmf,
                         size_t len,
                         double *out);

// # Safety
// `out` must be writable.
enum HhtxStatus hhtx_power_formula(double n_index, double n_total, double *out);

// Exact `W(n, m, v)` as a decimal string.
//
// # Safety
// `out` must be writable; release the string with [`hhtx_string_free`].
enum HhtxStatus hhtx_count_arrangements(uint64_t n, size_t m, uint64_t v, char **out);

// Release a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not be used again.
void hhtx_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HHTX_H */
