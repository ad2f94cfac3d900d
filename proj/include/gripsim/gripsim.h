#ifndef GRIPSIM_GRIPSIM_H
#define GRIPSIM_GRIPSIM_H

#include <stdint.h>

#if defined(_WIN32)
#  if defined(GRIPSIM_BUILDING)
#    define GS_API __declspec(dllexport)
#  else
#    define GS_API __declspec(dllimport)
#  endif
#else
#  define GS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gs_status {
  GS_OK = 0,
  GS_INVALID_ARGUMENT = 1,
  GS_SIMULATION_DIVERGED = 2,
  GS_PRECONDITION_FAILED = 3,
  GS_DIMENSION_MISMATCH = 4,
  GS_MISSING_CLASS = 5,
  GS_IO = 6,
  GS_PARSE = 7,
  GS_INTERNAL = 99
} gs_status;

typedef struct gs_config gs_config;
typedef struct gs_model gs_model;
typedef struct gs_session gs_session;

GS_API const char* gs_version(void);
GS_API int gs_protocol_version(void);
GS_API const char* gs_status_name(gs_status status);

/* Message of the last failed call on this thread; "" if none. */
GS_API const char* gs_last_error(void);

/* Strings returned through char** out-parameters are owned by the caller. */
GS_API void gs_string_free(char* s);

GS_API gs_status gs_config_default(gs_config** out);
GS_API gs_status gs_config_load(const char* path, gs_config** out);
GS_API gs_status gs_config_parse(const char* json, gs_config** out);
GS_API gs_status gs_config_to_json(const gs_config* config, char** out);
GS_API void gs_config_free(gs_config* config);

/* Runs the collection protocol (seed replaces the protocol seed) and writes
   dataset.jsonl and collection.json into out_dir; with write_sensor_log also
   sensor.jsonl. Summary is JSON. */
GS_API gs_status gs_collect(const gs_config* config, uint64_t seed, const char* out_dir, int write_sensor_log,
                            char** summary);

/* Trains on the training split of data_dir/dataset.jsonl and writes the model
   file. Summary holds the held-out evaluation. */
GS_API gs_status gs_train(const gs_config* config, const char* data_dir, uint64_t seed, const char* model_path,
                          char** summary);

GS_API gs_status gs_model_load(const char* path, gs_model** out);
/* Collects and trains in memory from the config's protocol. */
GS_API gs_status gs_model_train_default(const gs_config* config, uint64_t seed, gs_model** out);
GS_API gs_status gs_model_save(const gs_model* model, const char* path);
GS_API void gs_model_free(gs_model* model);

/* split: "heldout" (default when NULL) or "all". Writes eval.json into
   out_dir when out_dir is not NULL. */
GS_API gs_status gs_eval(const gs_config* config, const gs_model* model, const char* data_dir, const char* split,
                         const char* out_dir, char** summary);

/* Experiments. options is a JSON object or NULL:
     grasp:        {"objects": ["pinch", "generated:3", ...], "fingers": [2, 3], "trials": 5, "duration": 10,
                    "traces": true}
     perturb:      {"object": "heavy-box", "fingers": 3, "trials": 5, "traces": true}
     master-slave: {"object": "heavy-box", "fingers": 3, "trials": 5, "duration": 10, "traces": true}
   Objects are names or full object specs. Reports go to out_dir. */
GS_API gs_status gs_grasp(const gs_config* config, const gs_model* model, const char* options, uint64_t seed,
                          const char* out_dir, char** summary);
GS_API gs_status gs_perturb(const gs_config* config, const gs_model* model, const char* options, uint64_t seed,
                            const char* out_dir, char** summary);
GS_API gs_status gs_master_slave(const gs_config* config, const gs_model* model, const char* options, uint64_t seed,
                                 const char* out_dir, char** summary);

/* Live session. options: {"object": ..., "fingers": 3}. */
GS_API gs_status gs_session_create(const gs_config* config, const gs_model* model, const char* options, uint64_t seed,
                                   gs_session** out);
GS_API gs_status gs_session_hello(const gs_session* session, char** json);
/* Reply is an ack or error message; a rejected command still returns GS_OK. */
GS_API gs_status gs_session_submit(gs_session* session, const char* message, char** reply);
GS_API gs_status gs_session_advance(gs_session* session, int* stepped);
GS_API gs_status gs_session_snapshot(const gs_session* session, char** json);
GS_API void gs_session_free(gs_session* session);

/* Blocking WebSocket server. options: {"address": "127.0.0.1", "port": 8765, "object": ..., "fingers": 3,
   "snapshot_rate": 30, "realtime": true, "max_connections": 0}. */
GS_API gs_status gs_serve(const gs_config* config, const gs_model* model, const char* options, uint64_t seed);

#ifdef __cplusplus
}
#endif

#endif
