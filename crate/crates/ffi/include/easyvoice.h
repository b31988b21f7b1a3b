#ifndef EASYVOICE_H
#define EASYVOICE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum EvStatus {
  EV_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  EV_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  EV_STATUS_INVALID_UTF8 = 2,
  /**
   * Rules, inventory, word list, layout or abbreviation input was rejected.
   */
  EV_STATUS_INVALID_INPUT = 3,
  /**
   * A pipeline stage failed; the message names the stage.
   */
  EV_STATUS_PIPELINE_FAILED = 4,
  /**
   * The library panicked; the handle should not be used again.
   */
  EV_STATUS_INTERNAL = 5,
} EvStatus;

typedef enum EvScanEvent {
  EV_SCAN_EVENT_TICK = 0,
  EV_SCAN_EVENT_PRESS = 1,
} EvScanEvent;

typedef enum EvScanMode {
  EV_SCAN_MODE_IDLE = 0,
  EV_SCAN_MODE_GROUP_SCAN = 1,
  EV_SCAN_MODE_ITEM_SCAN = 2,
} EvScanMode;

typedef struct EvDictionary EvDictionary;

typedef struct EvPipeline EvPipeline;

typedef struct EvRuleSet EvRuleSet;

typedef struct EvScanSession EvScanSession;

/**
 * Bytes owned by the library.
 */
typedef struct EvBuffer {
  uint8_t *data;
  size_t len;
} EvBuffer;

typedef struct EvScanState {
  enum EvScanMode mode;
  /**
   * Group being scanned in item mode, otherwise 0.
   */
  size_t group;
  size_t cursor;
  uint32_t cycles_done;
} EvScanState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Why the most recent call on this thread failed, or null if it succeeded.
 * Valid until the next call into the library from the same thread.
 */
const char *ev_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *ev_version(void);

void ev_string_free(char *s);

void ev_buffer_free(struct EvBuffer buffer);

/**
 * Parses a rule file.
 */
enum EvStatus ev_ruleset_parse(const char *source, struct EvRuleSet **out);

void ev_ruleset_free(struct EvRuleSet *rules);

/**
 * Rewrites `input` and returns the phonetic text.
 */
enum EvStatus ev_ruleset_rewrite(const struct EvRuleSet *rules, const char *input, char **out_text);

/**
 * A pipeline with the mock synthesizer. Null `rules_source` or
 * `inventory_source` selects the shipped Portuguese data.
 */
enum EvStatus ev_pipeline_new(const char *rules_source,
                              const char *inventory_source,
                              struct EvPipeline **out);

void ev_pipeline_free(struct EvPipeline *pipeline);

/**
 * Adds or replaces an abbreviation used by later `ev_pipeline_speak` calls.
 */
enum EvStatus ev_pipeline_set_abbreviation(struct EvPipeline *pipeline,
                                           const char *abbreviation,
                                           const char *expansion);

/**
 * Synthesizes `text`. Either output pointer may be null when not wanted.
 * On `PipelineFailed` the message starts with the failing stage name.
 */
enum EvStatus ev_pipeline_speak(const struct EvPipeline *pipeline,
                                const char *text,
                                uint64_t seed,
                                char **out_pho,
                                struct EvBuffer *out_wav);

/**
 * The shipped Portuguese word list.
 */
struct EvDictionary *ev_dictionary_builtin(void);

/**
 * Parses a word list (`word` or `word<TAB>count` per line).
 */
enum EvStatus ev_dictionary_load(const char *source, struct EvDictionary **out);

void ev_dictionary_free(struct EvDictionary *dict);

/**
 * Adds a word with count zero. `out_added` (nullable) tells whether it was new.
 */
enum EvStatus ev_dictionary_add_word(struct EvDictionary *dict, const char *word, bool *out_added);

enum EvStatus ev_dictionary_record_use(struct EvDictionary *dict, const char *word);

/**
 * Up to `k` completions of `prefix`, one per line, most used first.
 */
enum EvStatus ev_dictionary_predict(const struct EvDictionary *dict,
                                    const char *prefix,
                                    size_t k,
                                    char **out_words);

/**
 * A scan session. Null `layout_source` selects the shipped alphabetic
 * layout; zero `period_ms` or `max_cycles` selects the default.
 */
enum EvStatus ev_scan_session_new(const char *layout_source,
                                  uint32_t period_ms,
                                  uint32_t max_cycles,
                                  struct EvScanSession **out);

void ev_scan_session_free(struct EvScanSession *session);

/**
 * Feeds one event. `out_key` (nullable) receives the emitted key as shown
 * on the keyboard (`A`, `<space>`, ...), or null when nothing was emitted.
 */
enum EvStatus ev_scan_session_step(struct EvScanSession *session,
                                   enum EvScanEvent event,
                                   char **out_key);

enum EvStatus ev_scan_session_state(const struct EvScanSession *session, struct EvScanState *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EASYVOICE_H */
