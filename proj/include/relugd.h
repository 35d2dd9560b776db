/* C interface for the relu-gd laboratory.
 *
 * All functions return a status code: 0 success, 1 lemma violation,
 * 2 configuration error, 3 oracle incompatibility, 4 invalid argument.
 * rgd_last_error() describes the most recent failure on this thread.
 */
#ifndef RELUGD_H
#define RELUGD_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define RGD_OK 0
#define RGD_LEMMA_VIOLATION 1
#define RGD_CONFIG_ERROR 2
#define RGD_ORACLE_INCOMPATIBLE 3
#define RGD_INVALID_ARGUMENT 4

const char* rgd_version(void);
const char* rgd_last_error(void);

/* ---- commands (mirror the CLI subcommands) ----
 * out_dir may be NULL (use the config's output.dir). seed/jobs overrides are
 * applied when has_seed / jobs > 0. */
int rgd_run(const char* config_path, const char* out_dir, int has_seed, uint64_t seed, int jobs);
int rgd_sweep(const char* config_path, const char* out_dir, int has_seed, uint64_t seed,
              int jobs);
int rgd_verify_lemmas(const char* config_path, const char* out_dir, int has_seed, uint64_t seed,
                      int jobs);
int rgd_estimate_regularity(const char* config_path, const char* out_dir, int has_seed,
                            uint64_t seed, int jobs);
int rgd_init_study(const char* config_path, const char* out_dir, int has_seed, uint64_t seed,
                   int jobs);

/* ---- Gaussian population oracles ----
 * Weight vectors are passed as d coordinates plus an explicit bias. */
int rgd_population_f_gauss(size_t d, const double* w, double bw, const double* v, double bv,
                           size_t nodes, double* out);
int rgd_population_f0_gauss(size_t d, const double* v, double bv, double* out);
int rgd_population_grad_f_gauss(size_t d, const double* w, double bw, const double* v, double bv,
                                size_t nodes, double* grad_out /* d entries */,
                                double* grad_bias_out);
int rgd_joint_orthant_prob_gauss(size_t d, const double* w, double bw, const double* v,
                                 double bv, size_t nodes, double* out);

/* ---- instances ---- */
typedef struct rgd_instance rgd_instance;

/* family: 0 gaussian, 1 uniform cube, 2 laplace.
 * label_model: 0 realizable, 1 gaussian noise (noise_param = std),
 * 2 uniform bounded noise (noise_param = half width). */
rgd_instance* rgd_instance_create(int family, size_t d, const double* v_tilde, double bv,
                                  int label_model, double noise_param);
void rgd_instance_free(rgd_instance* instance);

int rgd_opt_value(const rgd_instance* instance, double* out);
int rgd_mc_loss(const rgd_instance* instance, const double* w, double bw, size_t n,
                uint64_t seed, double* estimate_out, double* std_err_out);

#ifdef __cplusplus
}
#endif

#endif /* RELUGD_H */
