#ifndef SECWIRE_H
#define SECWIRE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SecwireStatus {
  SECWIRE_STATUS_OK = 0,
  SECWIRE_STATUS_NULL_POINTER = 1,
  SECWIRE_STATUS_INVALID_ARGUMENT = 2,
  SECWIRE_STATUS_BUDGET_EXCEEDED = 3,
  SECWIRE_STATUS_IO = 4,
  SECWIRE_STATUS_INTERNAL = 5,
} SecwireStatus;

typedef struct SecwireChannel SecwireChannel;

typedef struct SecwireSequence SecwireSequence;

typedef struct SecwireTriple SecwireTriple;

/**
 * Outcome of one feedback session over an ideal link.
 */
typedef struct SecwireSession {
  size_t chunks_sent;
  size_t i_star;
  bool stopped;
  bool correct;
  double compression_ratio;
  double rho;
  size_t impostors;
} SecwireSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into the library on this thread.
 */
const char *secwire_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *secwire_version(void);

/**
 * Creates a sequence over `{0, ..., alphabet - 1}` from `len` symbols.
 *
 * # Safety
 * `data` must point to `len` readable values (or be NULL when `len` is 0)
 * and `out` must be writable.
 */
enum SecwireStatus secwire_sequence_new(size_t alphabet,
                                        const uint32_t *data,
                                        size_t len,
                                        struct SecwireSequence **out_seq);

/**
 * Reads a sequence file.
 *
 * # Safety
 * `file` must be a NUL-terminated string and `out` writable.
 */
enum SecwireStatus secwire_sequence_read(const char *file, struct SecwireSequence **out_seq);

/**
 * # Safety
 * `seq` must come from this library and not be used afterwards. NULL is ignored.
 */
void secwire_sequence_free(struct SecwireSequence *seq);

/**
 * # Safety
 * `seq` must be a live handle.
 */
size_t secwire_sequence_len(const struct SecwireSequence *seq);

/**
 * Phrase count `c` and LZ complexity `c log c / n` of a sequence.
 *
 * # Safety
 * `seq` must be a live handle; output pointers must be writable.
 */
enum SecwireStatus secwire_lz_complexity(const struct SecwireSequence *seq,
                                         size_t *out_phrases,
                                         double *out_rho);

/**
 * Conditional LZ complexity of `u` given `w`.
 *
 * # Safety
 * Both handles must be live; `out_rho` must be writable.
 */
enum SecwireStatus secwire_conditional_lz_complexity(const struct SecwireSequence *u,
                                                     const struct SecwireSequence *w,
                                                     double *out_rho);

/**
 * Creates a channel from a row-major `inputs x outputs` matrix.
 *
 * # Safety
 * `data` must point to `inputs * outputs` readable values.
 */
enum SecwireStatus secwire_channel_new(size_t inputs,
                                       size_t outputs,
                                       const double *data,
                                       struct SecwireChannel **out_channel);

/**
 * Reads a channel file.
 *
 * # Safety
 * `file` must be a NUL-terminated string and `out` writable.
 */
enum SecwireStatus secwire_channel_read(const char *file, struct SecwireChannel **out_channel);

/**
 * # Safety
 * `channel` must come from this library and not be used afterwards. NULL is ignored.
 */
void secwire_channel_free(struct SecwireChannel *channel);

/**
 * Capacity of a channel in bits per use, with a certified gap.
 *
 * # Safety
 * `channel` must be a live handle; output pointers must be writable.
 */
enum SecwireStatus secwire_channel_capacity(const struct SecwireChannel *channel,
                                            double tol,
                                            double *out_value,
                                            double *out_gap);

/**
 * Pairs a main channel with a wiretap channel fed by its output. Both
 * channels are copied; the caller keeps ownership of its handles.
 *
 * # Safety
 * Both handles must be live; `out_triple` must be writable.
 */
enum SecwireStatus secwire_triple_new(const struct SecwireChannel *main,
                                      const struct SecwireChannel *wiretap,
                                      struct SecwireTriple **out_triple);

/**
 * # Safety
 * `triple` must come from this library and not be used afterwards. NULL is ignored.
 */
void secwire_triple_free(struct SecwireTriple *triple);

/**
 * Copies the source-to-eavesdropper cascade into a new channel handle.
 *
 * # Safety
 * `triple` must be live; `out_channel` writable.
 */
enum SecwireStatus secwire_triple_cascade(const struct SecwireTriple *triple,
                                          struct SecwireChannel **out_channel);

/**
 * Secrecy capacity. When `argmax` is not NULL it receives the maximizing
 * input law and must hold `argmax_len` values, at least the main channel's
 * input alphabet size.
 *
 * # Safety
 * `triple` must be live; output pointers writable with the stated sizes.
 */
enum SecwireStatus secwire_secrecy_capacity(const struct SecwireTriple *triple,
                                            double tol,
                                            double *out_value,
                                            double *out_gap,
                                            double *argmax,
                                            size_t argmax_len);

/**
 * Redundancy term of the bandwidth-expansion bound without side
 * information, minimised over block multiples `ell`.
 *
 * # Safety
 * Output pointers must be writable.
 */
enum SecwireStatus secwire_zeta(size_t n,
                                size_t k,
                                size_t q_d,
                                size_t alpha,
                                double eps_n,
                                double *out_value,
                                size_t *out_ell);

/**
 * Redundancy term of the bound with decoder side information.
 *
 * # Safety
 * Output pointers must be writable.
 */
enum SecwireStatus secwire_eta(size_t n,
                               size_t k,
                               size_t q_e,
                               size_t q_d,
                               size_t alpha,
                               size_t omega,
                               double eps_n,
                               double *out_value,
                               size_t *out_ell);

/**
 * Runs one feedback session for `u` with receiver side information `w`
 * over an error-free link.
 *
 * # Safety
 * Both handles must be live; `out_session` writable.
 */
enum SecwireStatus secwire_feedback_session(const struct SecwireSequence *u,
                                            const struct SecwireSequence *w,
                                            size_t r,
                                            double delta,
                                            uint64_t seed,
                                            struct SecwireSession *out_session);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SECWIRE_H */
