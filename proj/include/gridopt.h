/* gridopt C API: power-network optimization behind a C ABI.
 *
 * Every function returns a gridopt_status code; rich results are returned as
 * JSON strings allocated by the library and released with
 * gridopt_string_free.  Networks are opaque handles, immutable once loaded,
 * safe to share across threads for concurrent solves.  On any error,
 * gridopt_last_error() returns a thread-local message.
 */
#ifndef GRIDOPT_H
#define GRIDOPT_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  GRIDOPT_OK = 0,
  GRIDOPT_ERR_IO = 1,        /* missing file, unreadable directory */
  GRIDOPT_ERR_PARSE = 2,     /* malformed case text */
  GRIDOPT_ERR_DATA = 3,      /* structurally invalid network data */
  GRIDOPT_ERR_OPTION = 4,    /* bad problem/formulation/option values */
  GRIDOPT_ERR_INTERNAL = 5,
} gridopt_status;

typedef struct gridopt_network gridopt_network;

const char* gridopt_version(void);

/* Thread-local message describing the most recent failure in this thread. */
const char* gridopt_last_error(void);

const char* gridopt_status_name(gridopt_status status);

void gridopt_string_free(char* text);

/* ---- network handles ---- */

gridopt_status gridopt_network_load(const char* case_path, gridopt_network** out);
gridopt_status gridopt_network_parse(const char* case_text, gridopt_network** out);
void gridopt_network_free(gridopt_network* net);

gridopt_status gridopt_network_counts(const gridopt_network* net, int* buses, int* gens,
                                      int* branches, int* dclines);

/* Raw-case debugging document (baseMVA, bus, gen, branch, gencost, dcline). */
gridopt_status gridopt_case_to_json(const char* case_text, char** json_out);

/* Parse + build + summarize; fails on structurally invalid data. */
gridopt_status gridopt_validate(const char* case_path, char** json_out);

/* ---- solving ----
 *
 * problem:      "opf" | "ots" | "pf"
 * formulation:  "acp" | "acr" | "act" | "dcp" | "socwr" | "qcwr"
 * options_json: optional (NULL for defaults), e.g.
 *               {"tol":1e-6,"max_iter":500,"time_limit":60.0,"seed":0}
 */

gridopt_status gridopt_solve(const gridopt_network* net, const char* problem,
                             const char* formulation, const char* options_json,
                             char** result_json_out);

gridopt_status gridopt_run(const char* case_path, const char* problem, const char* formulation,
                           const char* options_json, char** result_json_out);

/* Formulation comparison (formulations as a space- or comma-separated list;
 * must include acp).  The report carries per-row objective, delta vs acp for
 * the exact forms and the optimality gap for the relaxations. */
gridopt_status gridopt_compare(const char* case_path, const char* formulations,
                               const char* options_json, char** report_json_out);

/* Table-II style text rendering of a comparison (5 significant digits). */
gridopt_status gridopt_compare_table(const char* case_path, const char* formulations,
                                     const char* options_json, char** table_out);

/* Convex-relaxation infeasibility screening ("dcp", "socwr" or "qcwr"). */
gridopt_status gridopt_screen(const char* case_path, const char* formulation,
                              const char* options_json, char** report_json_out);

/* Batch over a directory of .m files; writes CSV to out_csv_path (optional,
 * may be NULL) and returns the CSV text. */
gridopt_status gridopt_batch(const char* dir_path, const char* problem,
                             const char* formulations, const char* options_json,
                             const char* out_csv_path, char** csv_out);

/* Solver-agnostic program export (variables, constraint expression trees,
 * objective) for external solvers. */
gridopt_status gridopt_export_program(const gridopt_network* net, const char* problem,
                                      const char* formulation, char** program_json_out);

/* Check an externally produced primal vector ({"primal":[...]}) against a
 * freshly built program; reports objective and worst violation. */
gridopt_status gridopt_import_solution(const gridopt_network* net, const char* problem,
                                       const char* formulation, const char* solution_json,
                                       char** report_json_out);

#ifdef __cplusplus
}
#endif

#endif /* GRIDOPT_H */
