#ifndef SKILLMINE_H
#define SKILLMINE_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SmStatus {
  SM_STATUS_OK = 0,
  SM_STATUS_NULL_ARGUMENT = 1,
  SM_STATUS_INVALID_UTF8 = 2,
  SM_STATUS_INVALID_JSON = 3,
  SM_STATUS_INVALID_MODEL = 4,
  SM_STATUS_CONFORMANCE = 5,
  SM_STATUS_IO = 6,
  SM_STATUS_RETRIEVAL = 7,
  SM_STATUS_NOT_FOUND = 8,
  SM_STATUS_PANIC = 9,
} SmStatus;

/**
 * A collection of skills keyed by id.
 */
typedef struct SmLibrary SmLibrary;

/**
 * A skill: process tree, workflow net and query texts.
 */
typedef struct SmSkill SmSkill;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call on the same thread.
 */
const char *sm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sm_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void sm_string_free(char *s);

/**
 * Builds a skill from a process tree in text form, e.g. `SEQ('A','B')`.
 *
 * # Safety
 * `id` and `tree` must be NUL-terminated strings; `out` must be writable.
 */
enum SmStatus sm_skill_from_tree(const char *id, const char *tree, struct SmSkill **out);

/**
 * Discovers a skill from an event log given as JSON
 * (`{"process_id", "query_texts", "traces": [{"id", "actions"}]}`).
 *
 * # Safety
 * `log_json` must be a NUL-terminated string; `out` must be writable.
 */
enum SmStatus sm_skill_discover(const char *log_json, struct SmSkill **out);

/**
 * # Safety
 * `skill` must be null or a handle from this library, not yet freed.
 */
void sm_skill_free(struct SmSkill *skill);

/**
 * # Safety
 * `skill` must be a live handle; `out` must be writable.
 */
enum SmStatus sm_skill_id(const struct SmSkill *skill, char **out);

/**
 * Process tree of the skill in text form.
 *
 * # Safety
 * `skill` must be a live handle; `out` must be writable.
 */
enum SmStatus sm_skill_tree(const struct SmSkill *skill, char **out);

/**
 * Whole skill as JSON.
 *
 * # Safety
 * `skill` must be a live handle; `out` must be writable.
 */
enum SmStatus sm_skill_json(const struct SmSkill *skill, char **out);

/**
 * Alignment-based fitness of a trace against the skill's net.
 *
 * # Safety
 * `skill` must be a live handle, `trace_json` a NUL-terminated string and
 * `out` writable.
 */
enum SmStatus sm_alignment_fitness(const struct SmSkill *skill,
                                   const char *trace_json,
                                   double *out);

/**
 * Token-replay fitness of a trace against the skill's net.
 *
 * # Safety
 * As for [`sm_alignment_fitness`].
 */
enum SmStatus sm_replay_fitness(const struct SmSkill *skill, const char *trace_json, double *out);

/**
 * Optimal alignment as JSON (`moves`, `cost`, `fitness`).
 *
 * # Safety
 * `skill` must be a live handle, `trace_json` a NUL-terminated string and
 * `out` writable.
 */
enum SmStatus sm_align(const struct SmSkill *skill, const char *trace_json, char **out);

/**
 * # Safety
 * `out` must be writable.
 */
enum SmStatus sm_library_new(struct SmLibrary **out);

/**
 * Loads a library directory written by `skillmine discover` or `synth`.
 *
 * # Safety
 * `dir` must be a NUL-terminated string; `out` must be writable.
 */
enum SmStatus sm_library_load(const char *dir, struct SmLibrary **out);

/**
 * Adds a copy of `skill`, replacing a skill with the same id.
 *
 * # Safety
 * `library` and `skill` must be live handles.
 */
enum SmStatus sm_library_add(struct SmLibrary *library, const struct SmSkill *skill);

/**
 * Number of skills; 0 for a null handle.
 *
 * # Safety
 * `library` must be null or a live handle.
 */
size_t sm_library_len(const struct SmLibrary *library);

/**
 * Copy of the skill with id `id`.
 *
 * # Safety
 * `library` must be a live handle, `id` a NUL-terminated string and `out`
 * writable.
 */
enum SmStatus sm_library_get(const struct SmLibrary *library, const char *id, struct SmSkill **out);

/**
 * Ranks the library by alignment fitness of `thought_json`; writes the
 * top-`k` list as JSON.
 *
 * # Safety
 * `library` must be a live handle, `thought_json` a NUL-terminated string
 * and `out` writable.
 */
enum SmStatus sm_retrieve_conformance(const struct SmLibrary *library,
                                      const char *thought_json,
                                      size_t k,
                                      char **out);

/**
 * # Safety
 * `library` must be null or a handle from this library, not yet freed.
 */
void sm_library_free(struct SmLibrary *library);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKILLMINE_H */
