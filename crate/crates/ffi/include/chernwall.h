#ifndef CHERNWALL_H
#define CHERNWALL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result of every fallible call.
typedef enum CwStatus {
  CW_STATUS_OK = 0,
  CW_STATUS_NULL_POINTER = 1,
  CW_STATUS_INVALID_INPUT = 2,
  CW_STATUS_NEAR_DEGENERACY = 3,
  CW_STATUS_UNSTABLE = 4,
  CW_STATUS_NOT_ON_WALL = 5,
  CW_STATUS_DIRECTION_TANGENT = 6,
  CW_STATUS_NEAR_INTERSECTION = 7,
  CW_STATUS_RANK_DEFICIENT = 8,
  CW_STATUS_INVALID_J = 9,
  CW_STATUS_AMBIGUOUS_BANDS = 10,
  CW_STATUS_CHART_INCONSISTENT = 11,
  CW_STATUS_OUT_OF_RANGE = 12,
  CW_STATUS_PANIC = 13,
  CW_STATUS_OTHER = 14,
} CwStatus;

// Opaque iso-Chern domain chart.
typedef struct CwDomainChart CwDomainChart;

// One domain of a chart.
typedef struct CwDomain {
  double a;
  double b;
  // Distance of the representative point from the nearest wall.
  double wall_distance;
  // Chern numbers computed directly at the representative.
  int64_t chern[3];
  // Whether the triple propagated across walls agrees with `chern`.
  bool consistent;
} CwDomain;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null if it succeeded.
// The pointer stays valid until the next library call on this thread.
const char *cw_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *cw_version(void);

// Chern numbers of the three bands at `(a, b)`, refined from `mesh` cells
// per cube edge until stable. Writes three integers to `out_chern` and the
// final mesh size to `out_mesh` (may be null).
//
// # Safety
// `out_chern` must point to space for 3 `int64_t`; `out_mesh` must be null
// or valid for one write.
enum CwStatus cw_chern_numbers(double a,
                               double b,
                               size_t mesh,
                               int64_t *out_chern,
                               size_t *out_mesh);

// Minimum over the sphere of the eigenvalue discriminant at `(a, b)`.
//
// # Safety
// `out` must be valid for one write.
enum CwStatus cw_min_discriminant(double a, double b, double *out);

// Change of the three Chern numbers when crossing `wall` (one of `a=+1/3`,
// `a=-1/3`, `b=+1`, `b=-1`, `c2+`, `c2-`) at `(a, b)` along `(da, db)`.
//
// # Safety
// `wall` must be a NUL-terminated string; `out_delta` must point to space
// for 3 `int64_t`.
enum CwStatus cw_delta_chern(const char *wall,
                             double a,
                             double b,
                             double da,
                             double db,
                             int64_t *out_delta);

// Number of quantum levels in each of the three bands at rotational
// quantum number `j`.
//
// # Safety
// `out_counts` must point to space for 3 `size_t`.
enum CwStatus cw_quantum_band_counts(uint32_t j, double a, double b, size_t *out_counts);

// Builds the domain chart over `[a_min, a_max] x [b_min, b_max]`. `step`
// and `mesh` fall back to the library defaults when zero.
//
// # Safety
// `out` must be valid for one write. The chart must be released with
// [`cw_domain_chart_free`].
enum CwStatus cw_domain_chart_build(double a_min,
                                    double a_max,
                                    double b_min,
                                    double b_max,
                                    double step,
                                    size_t mesh,
                                    struct CwDomainChart **out);

// Number of domains, or 0 for a null chart.
//
// # Safety
// `chart` must be null or a live chart from [`cw_domain_chart_build`].
size_t cw_domain_chart_len(const struct CwDomainChart *chart);

// Copies domain `index` into `out`.
//
// # Safety
// `chart` must be a live chart; `out` must be valid for one write.
enum CwStatus cw_domain_chart_get(const struct CwDomainChart *chart,
                                  size_t index,
                                  struct CwDomain *out);

// The chart serialized as JSON, or null on failure. Release with
// [`cw_string_free`].
//
// # Safety
// `chart` must be null or a live chart.
char *cw_domain_chart_to_json(const struct CwDomainChart *chart);

// Releases a chart. Null is ignored.
//
// # Safety
// `chart` must be null or a chart not yet freed.
void cw_domain_chart_free(struct CwDomainChart *chart);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void cw_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* CHERNWALL_H */
