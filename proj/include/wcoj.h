/* C interface to the join-bound engine: opaque session handle, integer
 * status codes, JSON reports. Strings returned through out parameters are
 * owned by the caller and released with wcoj_string_free. */
#ifndef WCOJ_H
#define WCOJ_H

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes; the CLI uses them as exit codes. */
enum {
    WCOJ_OK = 0,
    WCOJ_ERROR = 1,
    WCOJ_PARSE_ERROR = 2,
    WCOJ_INCOMPATIBLE = 3,
    WCOJ_UNBOUNDED = 4,
    WCOJ_DERIVE_INCOMPLETE = 5
};

typedef struct wcoj_session wcoj_session;

wcoj_session* wcoj_session_create(void);
void wcoj_session_destroy(wcoj_session* s);

/* Message for the most recent failing call on this session. */
const char* wcoj_last_error(const wcoj_session* s);

void wcoj_string_free(char* s);

/* Suppresses wall-clock fields so reports are byte-identical across runs. */
void wcoj_set_deterministic(wcoj_session* s, int on);

/* Input loading. Constraints and data require a loaded query. */
int wcoj_load_query(wcoj_session* s, const char* path);
int wcoj_load_constraints(wcoj_session* s, const char* path);
int wcoj_load_data(wcoj_session* s, const char* dir);

/* method: "agm" | "modular" | "polymatroid" | "dual".
 * Writes a JSON report with the exact log2 value, the tuple-scale bound, and
 * (for "dual") the full certificate. */
int wcoj_bound(wcoj_session* s, const char* method, char** report_json);

/* algo: "backtrack" | "heavy-light" | "panda" | "bruteforce".
 * order: comma-separated variable names, or NULL for the default order.
 * seq_path: proof sequence file for "panda", or NULL to derive one.
 * tuples_csv: when non-NULL, the sorted output tuples are written there.
 * validate: nonzero checks the declared constraints against the data first
 * and fails the run when they do not hold. */
int wcoj_run(wcoj_session* s, const char* algo, const char* order, const char* seq_path,
             const char* tuples_csv, int validate, char** report_json);

/* Rewrites the constraints into an acyclic set (minimizing the bound among
 * reachable relaxations), writes it to out_path, and reports both bounds. */
int wcoj_acyclicize(wcoj_session* s, const char* out_path, char** report_json);

/* Derives a proof sequence from the optimal dual certificate / validates a
 * sequence file against it. */
int wcoj_proof_derive(wcoj_session* s, const char* seq_out_path, char** report_json);
int wcoj_proof_validate(wcoj_session* s, const char* seq_path, char** report_json);

/* spec_json examples:
 *   {"kind":"grid-triangle","m":100}
 *   {"kind":"agm-tight","n":1024}            (requires a loaded query)
 *   {"kind":"random","sizes":[40,30,20],"seed":7}
 * Writes <relation>.csv files plus manifest.json into out_dir. */
int wcoj_generate(wcoj_session* s, const char* spec_json, const char* out_dir,
                  char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* WCOJ_H */
