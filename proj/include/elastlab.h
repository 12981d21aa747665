/* C interface to the elastic inclusion laboratory.
 *
 * All entry points are exception-safe: failures are reported through return
 * codes (0 pass, 1 assertion failure, 2 configuration/usage error) and the
 * per-session error string.  Returned strings stay valid until the next call
 * on the same session, or until the session is closed.
 */
#ifndef ELASTLAB_H
#define ELASTLAB_H

#ifdef __cplusplus
extern "C" {
#endif

typedef struct elastlab_session elastlab_session;

elastlab_session* elastlab_open(void);
void elastlab_close(elastlab_session* s);

/* Set one configuration key (flat key = value schema). Returns 0, or 2 on
 * invalid arguments. */
int elastlab_set(elastlab_session* s, const char* key, const char* value);

/* Merge a configuration file into the session. Returns 0 or 2. */
int elastlab_load_config(elastlab_session* s, const char* path);

/* Run a named suite: validate, kernels, dtn, sderiv, sscale, stability.
 * Returns 0 pass, 1 assertion failure, 2 configuration error. */
int elastlab_run(elastlab_session* s, const char* suite);

/* Report of the last run (human-readable, includes artifact paths). */
const char* elastlab_summary(const elastlab_session* s);

/* Message of the last failure, empty when the last call succeeded. */
const char* elastlab_last_error(const elastlab_session* s);

const char* elastlab_version(void);

/* Closed-form bimaterial surface derivative d Gamma^R_33 / d x3 at
 * (x1, x2, x3): materials (mu, nu) on the pole side, (mup, nup) opposite,
 * unit load at height r.  Returns NaN on invalid input. */
double elastlab_rongved_d33(double mu, double nu, double mup, double nup,
                            double r, double x1, double x2, double x3);

#ifdef __cplusplus
}
#endif
#endif /* ELASTLAB_H */
