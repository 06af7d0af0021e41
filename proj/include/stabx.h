#ifndef STABX_H
#define STABX_H

/* C interface to the stability-transformation library.  All functions are
 * thread-compatible: distinct handles may be used from distinct threads, a
 * single handle must not be shared without external locking. */

#ifdef __cplusplus
extern "C" {
#endif

const char* stabx_version(void);

/* Opaque pipeline run configured from a file.  Creation never fails; config
 * problems surface as exit code 4 from stabx_run_execute. */
typedef struct stabx_run stabx_run;

stabx_run* stabx_run_create(const char* config_path);
void stabx_run_destroy(stabx_run* run);

/* Overrides applied on top of the config's [run] section; call before
 * stabx_run_execute.  Return 0 on success, -1 on invalid argument. */
int stabx_run_set_out_dir(stabx_run* run, const char* dir);
int stabx_run_set_seed(stabx_run* run, unsigned long long seed);
int stabx_run_set_tol(stabx_run* run, double tol);
int stabx_run_set_signals(stabx_run* run, int signals);

/* Executes the pipeline and writes the artifact files.  Returns the exit
 * code: 0 all checks pass, 2 check failure, 3 construction error, 4 config
 * error, -1 on null handle. */
int stabx_run_execute(stabx_run* run);

/* 1 iff the last execute returned 0. */
int stabx_run_passed(const stabx_run* run);

/* Report text of the last execute ("" before execute or on error exits);
 * owned by the handle, valid until the next execute or destroy. */
const char* stabx_run_report(const stabx_run* run);

/* Diagnostic message for exit codes 3 and 4 ("" otherwise). */
const char* stabx_run_error(const stabx_run* run);

/* Built-in example systems. */
int stabx_catalog_count(void);
/* Returns 0 on success, -1 on bad index.  Any output pointer may be null.
 * name_buf receives a NUL-terminated name truncated to name_cap - 1. */
int stabx_catalog_info(int index, char* name_buf, int name_cap, int* dim_x,
                       int* dim_d, int* has_iss_gain);
/* Description string of the entry, or "" on bad index; static storage. */
const char* stabx_catalog_description(int index);

#ifdef __cplusplus
}
#endif

#endif /* STABX_H */
