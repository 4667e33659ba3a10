#ifndef SHE_SHE_H
#define SHE_SHE_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum she_status {
  SHE_OK = 0,
  SHE_ERR_VALIDATION = 1,
  SHE_ERR_NUMERICAL = 2,
  SHE_ERR_IO = 3
} she_status;

typedef struct she_config she_config;
typedef struct she_result she_result;
typedef struct she_table she_table;

/* Message of the last failed call on this thread, "" if none. */
const char* she_last_error(void);
const char* she_version(void);

/* 0 restores the default (SHE_THREADS, else hardware concurrency). */
void she_set_threads(int n);
int she_threads(void);

/* Commands are "structure table", "kernel check", "renorm", ... */
size_t she_command_count(void);
const char* she_command_name(size_t i);
/* Keys accepted by a command, with default values and a one-line help. */
size_t she_command_key_count(const char* command);
const char* she_command_key(const char* command, size_t i);
const char* she_command_key_default(const char* command, size_t i);
const char* she_command_key_help(const char* command, size_t i);

/* Ordered key=value bag. Later sets of the same key overwrite. */
she_status she_config_new(she_config** out);
void she_config_free(she_config* cfg);
she_status she_config_set(she_config* cfg, const char* key, const char* value);
/* NULL when absent. */
const char* she_config_get(const she_config* cfg, const char* key);
size_t she_config_size(const she_config* cfg);
const char* she_config_key_at(const she_config* cfg, size_t i);
const char* she_config_value_at(const she_config* cfg, size_t i);
/* Text format: one key=value per line, '#' starts a comment. */
she_status she_config_load(she_config* cfg, const char* path);
she_status she_config_save(const she_config* cfg, const char* path);

/* Fills defaults for the command and rejects unknown keys; cfg is updated
   in place so it can be saved as the resolved configuration. */
she_status she_resolve(const char* command, she_config* cfg);
/* Resolves, then runs. */
she_status she_run(const char* command, she_config* cfg, she_result** out);
void she_result_free(she_result* r);

size_t she_result_table_count(const she_result* r);
const she_table* she_result_table(const she_result* r, size_t i);
size_t she_result_field_count(const she_result* r);
const char* she_result_field_name(const she_result* r, size_t i);
she_status she_result_field_write(const she_result* r, size_t i, const char* path);

const char* she_table_name(const she_table* t);
size_t she_table_rows(const she_table* t);
size_t she_table_cols(const she_table* t);
const char* she_table_header(const she_table* t, size_t col);
const char* she_table_cell(const she_table* t, size_t row, size_t col);
/* CSV with a header row; path NULL or "-" writes to stdout. */
she_status she_table_write_csv(const she_table* t, const char* path);

#ifdef __cplusplus
}
#endif

#endif
