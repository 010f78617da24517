// Copyright 2026 The ovon-mesh Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OVON_OVON_H_
#define OVON_OVON_H_

/* C interface to the ovon mesh. Handles are opaque; every call returns an
 * ovon_status, and on failure ovon_last_error() describes it (per thread).
 * Strings returned through char** are owned by the caller and released with
 * ovon_string_free(). */

#include <stddef.h>

#if defined(OVON_BUILDING_LIBRARY)
#define OVON_API __attribute__((visibility("default")))
#else
#define OVON_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ovon_status {
  OVON_OK = 0,
  OVON_ERR_INVALID_ARGUMENT = 1,
  OVON_ERR_SYNTAX = 2,
  OVON_ERR_SCHEMA = 3,
  OVON_ERR_VALIDATION = 4,
  OVON_ERR_INVALID_MANIFEST = 5,
  OVON_ERR_UNSUPPORTED_EVENT = 6,
  OVON_ERR_TIMEOUT = 7,
  OVON_ERR_CONNECT = 8,
  OVON_ERR_INVALID_RESPONSE = 9,
  OVON_ERR_BIND = 10,
  OVON_ERR_CONFIG = 11,
  OVON_ERR_IO = 12,
  OVON_ERR_DISCOVERY = 13,
  OVON_ERR_SCENARIO_SETUP = 14,
  OVON_ERR_INTERNAL = 99
} ovon_status;

OVON_API const char* ovon_status_string(ovon_status status);
OVON_API const char* ovon_last_error(void);
OVON_API const char* ovon_version(void);
OVON_API void ovon_string_free(char* s);

/* --- envelopes --------------------------------------------------------- */

typedef struct ovon_envelope ovon_envelope;

OVON_API ovon_status ovon_envelope_parse(const char* json, ovon_envelope** out);
OVON_API void ovon_envelope_free(ovon_envelope* env);
/* indent < 0 gives compact output. */
OVON_API ovon_status ovon_envelope_serialize(const ovon_envelope* env, int indent, char** out);
OVON_API ovon_status ovon_envelope_conversation_id(const ovon_envelope* env, char** out);
OVON_API size_t ovon_envelope_event_count(const ovon_envelope* env);
/* Event type name of event `index`, or NULL when out of range. Borrowed. */
OVON_API const char* ovon_envelope_event_type(const ovon_envelope* env, size_t index);

/* Checks `json` as an envelope. `report` (always set unless arguments are
 * bad) receives {"valid": bool, "error": str?, "violations": [{path,
 * message}]}. Returns OVON_OK, OVON_ERR_SYNTAX or OVON_ERR_SCHEMA. */
OVON_API ovon_status ovon_envelope_validate_text(const char* json, char** report);

/* Same for a bare manifest object; invalid manifests give
 * OVON_ERR_INVALID_MANIFEST. */
OVON_API ovon_status ovon_manifest_validate_text(const char* json, char** report);

/* --- client calls ------------------------------------------------------ */

typedef struct ovon_send_options {
  const char* url;              /* required; http:// only */
  const char* conversation_id;  /* NULL: generated */
  const char* from;             /* NULL: "urn:ovon:cli" */
  const char* speaker_id;       /* NULL: "cli-user" */
  const char* kind;             /* utterance (default), whisper, invite or bye */
  const char* text;             /* required for utterance and whisper */
  int with_invite;              /* non-zero: put an invite event first */
  long timeout_ms;              /* <= 0: 10000 */
} ovon_send_options;

OVON_API ovon_status ovon_send(const ovon_send_options* options, char** response_json);
OVON_API ovon_status ovon_send_envelope(const char* url, const char* envelope_json,
                                        long timeout_ms, char** response_json);

/* findAssistant against `registry_url`, following referrals. Result:
 * {"candidates": [...], "visited": [...]}. */
OVON_API ovon_status ovon_discover(const char* registry_url, const char* query,
                                   const char* from, long timeout_ms, char** result_json);
/* requestManifest; result is the published manifest object. */
OVON_API ovon_status ovon_request_manifest(const char* url, const char* from, long timeout_ms,
                                           char** manifest_json);

/* --- agents ------------------------------------------------------------ */

typedef struct ovon_agent ovon_agent;

typedef struct ovon_agent_options {
  const char* config_path;      /* JSON agent config; fields below override it */
  const char* name;
  const char* endpoint;         /* NULL: derived from host and port */
  const char* role;             /* mediator, specialist or registry */
  const char* backend;          /* echo, scripted:<path>, rules:<path> */
  const char* manifests_path;   /* registry bootstrap (JSON array) */
  const char* routes_json;      /* [{"keywords": [...], "url": "..."}] */
  const char* rewrites_json;    /* {"https://public/prefix": "http://127.0.0.1:8001"} */
  const char* transcripts_dir;
  const char* console_dir;      /* served under /console */
  const char* host;             /* NULL: 127.0.0.1 */
  int port;                     /* 0: any free port */
  double timeout_secs;          /* inactivity; <= 0 keeps config/default */
  const char* manifest_path;    /* this agent's own manifest */
} ovon_agent_options;

/* Builds the agent and starts its HTTP server. */
OVON_API ovon_status ovon_agent_start(const ovon_agent_options* options, ovon_agent** out);
OVON_API int ovon_agent_port(const ovon_agent* agent);
OVON_API const char* ovon_agent_endpoint(const ovon_agent* agent);
/* Handles one envelope in-process, bypassing HTTP. */
OVON_API ovon_status ovon_agent_handle(ovon_agent* agent, const char* envelope_json,
                                       char** response_json);
OVON_API void ovon_agent_stop(ovon_agent* agent);
OVON_API void ovon_agent_free(ovon_agent* agent);

/* --- scenarios --------------------------------------------------------- */

/* Runs a scenario file. `freeze_time` may be NULL. Any out pointer may be
 * NULL. `passed` is 1 when every expectation held. */
OVON_API ovon_status ovon_scenario_run(const char* path, const char* freeze_time,
                                       char** report_json, char** report_text,
                                       char** transcript_jsonl, int* passed);

/* PlantUML sequence diagram from transcript JSONL text. */
OVON_API ovon_status ovon_diagram_export(const char* transcript_jsonl, char** plantuml);

#ifdef __cplusplus
}
#endif

#endif /* OVON_OVON_H_ */
