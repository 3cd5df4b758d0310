// Copyright 2026 The pivotal authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the pivotal library. All functions return a status code
 * unless documented otherwise; on failure pvt_last_error() describes the
 * problem for the calling thread. Strings returned through a handle stay
 * valid until the handle is freed. */
#ifndef PIVOTAL_H
#define PIVOTAL_H

#include <stddef.h>
#include <stdint.h>

#if defined(PIVOTAL_BUILDING)
#define PVT_API __attribute__((visibility("default")))
#else
#define PVT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  PVT_OK = 0,
  PVT_E_INPUT = 1,        /* malformed argument, config or distribution */
  PVT_E_DOMAIN = 2,       /* mathematically undefined request */
  PVT_E_MODEL = 3,        /* Schottky data contradicts its guarantees */
  PVT_E_CONSTRUCTION = 4, /* no Schottky model found within the search budget */
  PVT_E_INTERNAL = 5,
  PVT_E_IO = 6
} pvt_status;

typedef enum { PVT_ARTIFACT_CURVE = 0, PVT_ARTIFACT_EXTRA = 1 } pvt_artifact_kind;

typedef struct pvt_request pvt_request;
typedef struct pvt_result pvt_result;

PVT_API const char* pvt_version(void);
PVT_API const char* pvt_status_name(int status);
PVT_API const char* pvt_last_error(void);

PVT_API size_t pvt_command_count(void);
PVT_API const char* pvt_command_name(size_t i); /* NULL when out of range */

PVT_API int pvt_request_new(const char* command, pvt_request** out);
PVT_API void pvt_request_free(pvt_request* req);
/* JSON text; NULL or "" restores the defaults. */
PVT_API int pvt_request_set_config(pvt_request* req, const char* json);
PVT_API int pvt_request_set_seed(pvt_request* req, uint64_t seed);
PVT_API int pvt_request_set_trajectories(pvt_request* req, int64_t n);
PVT_API int pvt_request_set_steps(pvt_request* req, int64_t n);
PVT_API int pvt_request_set_threads(pvt_request* req, int n);

PVT_API int pvt_run(const pvt_request* req, pvt_result** out);
PVT_API void pvt_result_free(pvt_result* res);

/* Accessors return NULL / 0 on a NULL handle. */
PVT_API int pvt_result_passed(const pvt_result* res);
PVT_API const char* pvt_result_report(const pvt_result* res);
PVT_API const char* pvt_result_summary(const pvt_result* res);
PVT_API double pvt_result_wall_seconds(const pvt_result* res);
PVT_API size_t pvt_result_artifact_count(const pvt_result* res);
PVT_API int pvt_result_artifact(const pvt_result* res, size_t i, int* kind, const char** name,
                                const char** content, size_t* length);

#ifdef __cplusplus
}
#endif

#endif
