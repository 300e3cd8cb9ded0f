/* C API for the ndvad video-anomaly-detection pipeline.
 *
 * All functions return NDVAD_OK (0) on success or an error code that matches
 * the CLI exit codes; ndvad_last_error() describes the last failure on the
 * calling thread. Strings returned through out-parameters are malloc'd and
 * must be released with ndvad_string_free().
 */
#ifndef NDVAD_H
#define NDVAD_H

#ifdef __cplusplus
extern "C" {
#endif

enum {
  NDVAD_OK = 0,
  NDVAD_ERR_INTERNAL = 1,
  NDVAD_ERR_CONFIG = 2,
  NDVAD_ERR_DATA = 3,
  NDVAD_ERR_NUMERIC = 4
};

typedef struct ndvad_pipeline ndvad_pipeline;

const char* ndvad_version(void);
const char* ndvad_last_error(void);

/* config_path may be NULL (defaults only); overrides_json may be NULL.
 * Precedence: defaults < file < NDVAD_SEED < overrides. */
int ndvad_pipeline_open(const char* config_path, const char* overrides_json,
                        ndvad_pipeline** out);
void ndvad_pipeline_close(ndvad_pipeline* p);

/* Canonical effective config as JSON text. */
int ndvad_pipeline_config(ndvad_pipeline* p, char** out_json);
void ndvad_string_free(char* s);

/* Pipeline commands; out_summary (optional) receives a JSON summary. */
int ndvad_synth(ndvad_pipeline* p, int force, char** out_summary);
int ndvad_pretrain(ndvad_pipeline* p, char** out_summary);
int ndvad_train(ndvad_pipeline* p, char** out_summary);
int ndvad_meta_train(ndvad_pipeline* p, char** out_summary);
int ndvad_adapt_eval(ndvad_pipeline* p, char** out_summary);
int ndvad_ablate(ndvad_pipeline* p, const char* study, char** out_summary);
/* frame_end < 0 means "to the end of the clip" */
int ndvad_dump_maps(ndvad_pipeline* p, const char* scene_id, int frame_begin, int frame_end,
                    char** out_summary);

#ifdef __cplusplus
}
#endif

#endif /* NDVAD_H */
