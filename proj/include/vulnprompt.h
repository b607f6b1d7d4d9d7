#ifndef VULNPROMPT_H
#define VULNPROMPT_H

#include <stdint.h>

#if defined(_WIN32)
#define VP_API __declspec(dllexport)
#else
#define VP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes shared with the CLI exit codes. */
typedef enum {
    VP_OK = 0,
    VP_ERR_USAGE = 1,   /* bad arguments: unknown plan, language, format */
    VP_ERR_DATA = 2,    /* unreadable or malformed inputs */
    VP_ERR_BACKEND = 3  /* transport failures, replay misses */
} vp_status;

/* Message for the most recent failure on this thread; valid until the next
 * call on the same thread. */
VP_API const char* vp_last_error(void);

/* Frees any char* produced by this library. */
VP_API void vp_string_free(char* text);

/* Preprocesses a JSONL corpus or a directory tree of source files into a
 * corpus file. `lang` is "java", "c" or "cpp". On success *summary_out
 * (optional) receives a tab-separated per-type count table. */
VP_API vp_status vp_ingest(const char* input, const char* lang, uint64_t seed, int top_k,
                    int budget, const char* out_path, char** summary_out);

/* Extracts "api" or "df" features for every sample into a JSONL file.
 * *summary_out (optional) receives "<extracted> <failed>". */
VP_API vp_status vp_extract(const char* corpus_path, const char* feature,
                     const char* out_path, char** summary_out);

/* Runs a detection plan over a corpus, one JSON record file per sample in
 * out_dir; existing records are reused. `backend_json` configures the
 * backend, e.g. {"kind":"replay","cache":"store"} or {"kind":"scripted",
 * "reply":"Yes."}. *summary_out (optional) receives
 * "<total> <downgraded> <errors>". */
VP_API vp_status vp_run(const char* corpus_path, const char* plan, const char* backend_json,
                 int max_in_flight, const char* out_dir, char** summary_out);

/* Scores a directory of run records into report files. `format` is "json",
 * "csv" or "markdown". *files_out (optional) receives the emitted paths,
 * newline-separated. */
VP_API vp_status vp_score(const char* runs_dir, const char* corpus_path, const char* format,
                   int strict, const char* out_dir, char** files_out);

/* Renders a prompt plan for one function; *turns_json_out receives a JSON
 * array of user-turn strings. */
VP_API vp_status vp_render_prompt(const char* plan, const char* code, const char* lang,
                           char** turns_json_out);

/* API call sequence of one function as a JSON array of "Type.member". */
VP_API vp_status vp_extract_api_json(const char* code, const char* lang, char** json_out);

/* Data-flow edges of one function as JSON. */
VP_API vp_status vp_extract_dataflow_json(const char* code, const char* lang, char** json_out);

#ifdef __cplusplus
}
#endif

#endif /* VULNPROMPT_H */
