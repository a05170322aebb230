#ifndef MHDNN_H
#define MHDNN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  MHDNN_STATUS_OK = 0,
  MHDNN_STATUS_NULL_POINTER = 1,
  MHDNN_STATUS_INVALID_ARGUMENT = 2,
  MHDNN_STATUS_DIVERGENT = 3,
  MHDNN_STATUS_KEY_REJECTED = 4,
  MHDNN_STATUS_IMAGE = 5,
  MHDNN_STATUS_PNM = 6,
  MHDNN_STATUS_IO = 7,
  MHDNN_STATUS_PROTOCOL = 8,
  MHDNN_STATUS_BUFFER_TOO_SMALL = 9,
  MHDNN_STATUS_PANIC = 10,
} MhdnnStatus;

/**
 * Opaque cipher keyed for one image size.
 */
typedef struct MhdnnCipher MhdnnCipher;

/**
 * Opaque secret key.
 */
typedef struct MhdnnKey MhdnnKey;

/**
 * Map parameters in the order `a, b, c, h, m, k`.
 */
typedef struct {
  double a;
  double b;
  double c;
  double h;
  double m;
  double k;
} MhdnnParamsC;

typedef struct {
  double x;
  double y;
  double z;
} MhdnnStateC;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * NUL-terminated message of the last failure on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *mhdnn_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mhdnn_version(void);

/**
 * Builds a key from `(x0, y0, z0, a, b, c, h, m)`.
 *
 * # Safety
 * `values` must point to 8 doubles and `out_key` to writable storage for a pointer.
 */
MhdnnStatus mhdnn_key_new(const double *values, MhdnnKey **out_key);

/**
 * Parses a 64-byte binary key or its 8-line text form.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes and `out_key` to writable storage.
 */
MhdnnStatus mhdnn_key_parse(const uint8_t *bytes, size_t len, MhdnnKey **out_key);

/**
 * Writes the 64-byte little-endian serialization.
 *
 * # Safety
 * `key` must come from this library and `out_bytes` must have room for 64 bytes.
 */
MhdnnStatus mhdnn_key_to_bytes(const MhdnnKey *key, uint8_t *out_bytes);

/**
 * # Safety
 * `key` must be NULL or a pointer from this library that is not used afterwards.
 */
void mhdnn_key_free(MhdnnKey *key);

/**
 * Derives keystreams and S-box for `rows x cols` images.
 *
 * # Safety
 * `key` must come from this library and `out_cipher` must be writable.
 */
MhdnnStatus mhdnn_cipher_new(const MhdnnKey *key,
                             size_t rows,
                             size_t cols,
                             MhdnnCipher **out_cipher);

/**
 * Copies the 256-entry substitution table into `out_table` (row-major 16x16).
 *
 * # Safety
 * `cipher` must come from this library and `out_table` must have room for 256 bytes.
 */
MhdnnStatus mhdnn_cipher_sbox(const MhdnnCipher *cipher, uint8_t *out_table);

/**
 * Encrypts row-major, channel-interleaved pixels in place; `channels` is 1 or 3 and
 * `len` must equal `rows * cols * channels`.
 *
 * # Safety
 * `cipher` must come from this library and `pixels` must point to `len` writable bytes.
 */
MhdnnStatus mhdnn_cipher_encrypt(const MhdnnCipher *cipher,
                                 uint8_t *pixels,
                                 size_t len,
                                 size_t channels);

/**
 * Inverse of [`mhdnn_cipher_encrypt`].
 *
 * # Safety
 * Same as [`mhdnn_cipher_encrypt`].
 */
MhdnnStatus mhdnn_cipher_decrypt(const MhdnnCipher *cipher,
                                 uint8_t *pixels,
                                 size_t len,
                                 size_t channels);

/**
 * # Safety
 * `cipher` must be NULL or a pointer from this library that is not used afterwards.
 */
void mhdnn_cipher_free(MhdnnCipher *cipher);

/**
 * Encrypts a binary PNM file image. The result is allocated by the library and must
 * be released with [`mhdnn_bytes_free`].
 *
 * # Safety
 * `input` must point to `len` readable bytes; the out pointers must be writable.
 */
MhdnnStatus mhdnn_encrypt_pnm(const MhdnnKey *key,
                              const uint8_t *input,
                              size_t len,
                              uint8_t **out_data,
                              size_t *out_len);

/**
 * # Safety
 * Same as [`mhdnn_encrypt_pnm`].
 */
MhdnnStatus mhdnn_decrypt_pnm(const MhdnnKey *key,
                              const uint8_t *input,
                              size_t len,
                              uint8_t **out_data,
                              size_t *out_len);

/**
 * # Safety
 * `data`/`len` must be exactly a pair returned by this library, or `data` NULL.
 */
void mhdnn_bytes_free(uint8_t *data, size_t len);

/**
 * One step of the coupled map.
 *
 * # Safety
 * All pointers must be valid.
 */
MhdnnStatus mhdnn_step(const MhdnnParamsC *params,
                       const MhdnnStateC *state,
                       MhdnnStateC *out_state);

/**
 * Writes `n` states (after `transient` discarded steps) as `x, y, z` triples into
 * `out_xyz`, which must hold `3 * n` doubles.
 *
 * # Safety
 * All pointers must be valid and `out_xyz` must hold `out_cap` doubles.
 */
MhdnnStatus mhdnn_iterate(const MhdnnParamsC *params,
                          const MhdnnStateC *state,
                          size_t transient,
                          size_t n,
                          double *out_xyz,
                          size_t out_cap);

/**
 * Lyapunov spectrum, sorted descending, into `out_spectrum[3]`.
 *
 * # Safety
 * All pointers must be valid; `out_spectrum` must hold 3 doubles.
 */
MhdnnStatus mhdnn_lyapunov(const MhdnnParamsC *params,
                           const MhdnnStateC *state,
                           size_t transient,
                           size_t iterations,
                           double *out_spectrum);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MHDNN_H */
