#ifndef RRAMKIT_H
#define RRAMKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RkStatus {
  RK_STATUS_OK = 0,
  RK_STATUS_NULL_POINTER = 1,
  RK_STATUS_INVALID_ARGUMENT = 2,
  RK_STATUS_PARSE = 3,
  RK_STATUS_CAPACITY = 4,
  RK_STATUS_DEVICE = 5,
  RK_STATUS_SECURITY = 6,
  RK_STATUS_BUFFER_TOO_SMALL = 7,
  RK_STATUS_PANIC = 8,
} RkStatus;

typedef struct RkCrossbar RkCrossbar;

typedef struct RkLimProgram RkLimProgram;

typedef struct RkPuf RkPuf;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static name of a status code.
 */
const char *rk_status_string(enum RkStatus status);

/**
 * Length in bytes of the calling thread's last error message, excluding the
 * terminating NUL; 0 after a successful call.
 */
size_t rk_last_error_length(void);

/**
 * Copy the last error message into `buf` (truncated, always NUL-terminated
 * when `cap > 0`). Returns the full message length.
 *
 * # Safety
 * `buf` must be valid for `cap` bytes of writes, or null with `cap == 0`.
 */
size_t rk_last_error_message(char *buf, size_t cap);

/**
 * New all-HRS crossbar with default device parameters. `d2d` and `c2c`
 * switch the default variation on or off.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum RkStatus rk_crossbar_new(size_t rows,
                              size_t cols,
                              uint64_t seed,
                              bool d2d,
                              bool c2c,
                              struct RkCrossbar **out);

/**
 * # Safety
 * `x` must come from [`rk_crossbar_new`] and not be used afterwards. Null is
 * ignored.
 */
void rk_crossbar_free(struct RkCrossbar *x);

/**
 * # Safety
 * `x` must be a live crossbar handle.
 */
enum RkStatus rk_crossbar_write_bit(struct RkCrossbar *x, size_t row, size_t col, bool bit);

/**
 * # Safety
 * `x` must be a live crossbar handle and `out` valid for a write.
 */
enum RkStatus rk_crossbar_read_bit(struct RkCrossbar *x, size_t row, size_t col, bool *out);

/**
 * Sensed resistance in ohms.
 *
 * # Safety
 * `x` must be a live crossbar handle and `out` valid for a write.
 */
enum RkStatus rk_crossbar_resistance(struct RkCrossbar *x, size_t row, size_t col, double *out);

/**
 * Program one of the six shipped levels (0 = LRS).
 *
 * # Safety
 * `x` must be a live crossbar handle.
 */
enum RkStatus rk_crossbar_program_level(struct RkCrossbar *x, size_t row, size_t col, size_t level);

/**
 * # Safety
 * `x` must be a live crossbar handle and `out` valid for a write.
 */
enum RkStatus rk_crossbar_read_level(struct RkCrossbar *x, size_t row, size_t col, size_t *out);

/**
 * Parse, map and schedule a BLIF netlist for a `rows x cols` array.
 *
 * # Safety
 * `blif` must be a NUL-terminated string and `out` valid for a write.
 */
enum RkStatus rk_lim_compile(const char *blif, size_t rows, size_t cols, struct RkLimProgram **out);

/**
 * # Safety
 * `p` must come from [`rk_lim_compile`] and not be used afterwards. Null is
 * ignored.
 */
void rk_lim_free(struct RkLimProgram *p);

/**
 * Primary input count; 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live program handle.
 */
size_t rk_lim_num_inputs(const struct RkLimProgram *p);

/**
 * Primary output count; 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live program handle.
 */
size_t rk_lim_num_outputs(const struct RkLimProgram *p);

/**
 * Execute one input vector. `energy_j` may be null; otherwise it receives
 * the total energy of the run in joules.
 *
 * # Safety
 * `p` and `x` must be live handles, `inputs` readable for `n_inputs` bytes,
 * `outputs` writable for `n_outputs` bytes, `energy_j` null or writable.
 */
enum RkStatus rk_lim_run(const struct RkLimProgram *p,
                         struct RkCrossbar *x,
                         const uint8_t *inputs,
                         size_t n_inputs,
                         uint8_t *outputs,
                         size_t n_outputs,
                         double *energy_j);

/**
 * Write the SPICE netlist for one input vector as a NUL-terminated string.
 * `needed` (if non-null) receives the size including the NUL; with a
 * too-small `buf` nothing is written and `RK_STATUS_BUFFER_TOO_SMALL` is
 * returned.
 *
 * # Safety
 * `p` must be a live handle, `inputs` readable for `n_inputs` bytes, `buf`
 * writable for `cap` bytes (or null with `cap == 0`), `needed` null or
 * writable.
 */
enum RkStatus rk_lim_emit_spice(const struct RkLimProgram *p,
                                const uint8_t *inputs,
                                size_t n_inputs,
                                char *buf,
                                size_t cap,
                                size_t *needed);

/**
 * Add two `n`-trit numbers in the crossbar (cells from the origin). `sum`
 * receives `n + 1` digits.
 *
 * # Safety
 * `x` must be a live handle, `a` and `b` readable for `n` bytes, `sum`
 * writable for `n + 1` bytes.
 */
enum RkStatus rk_ternary_add(struct RkCrossbar *x,
                             const uint8_t *a,
                             const uint8_t *b,
                             size_t n,
                             uint8_t *sum);

/**
 * Fill `out` with `n` TRNG bits from cell (`row`, `col`). A non-positive
 * `amplitude` selects the shipped default.
 *
 * # Safety
 * `x` must be a live handle and `out` writable for `n` bytes.
 */
enum RkStatus rk_trng_fill(struct RkCrossbar *x,
                           size_t row,
                           size_t col,
                           double amplitude,
                           bool debias,
                           uint8_t *out,
                           size_t n);

/**
 * New PUF chip with default device, variation and PUF settings.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum RkStatus rk_puf_new(uint64_t chip_seed, struct RkPuf **out);

/**
 * # Safety
 * `p` must come from [`rk_puf_new`] and not be used afterwards. Null is
 * ignored.
 */
void rk_puf_free(struct RkPuf *p);

/**
 * # Safety
 * `p` must be null or a live PUF handle.
 */
size_t rk_puf_challenge_len(const struct RkPuf *p);

/**
 * # Safety
 * `p` must be null or a live PUF handle.
 */
size_t rk_puf_response_len(const struct RkPuf *p);

/**
 * # Safety
 * `p` must be a live handle, `challenge` readable for `n_challenge` bytes
 * and `response` writable for `n_response` bytes.
 */
enum RkStatus rk_puf_response(struct RkPuf *p,
                              const uint8_t *challenge,
                              size_t n_challenge,
                              uint8_t *response,
                              size_t n_response);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RRAMKIT_H */
