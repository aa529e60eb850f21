#ifndef HVO_H
#define HVO_H

#include <stddef.h>
#include <stdint.h>

typedef enum HvoArchitecture {
  HVO_ARCHITECTURE_CONVENTIONAL = 0,
  HVO_ARCHITECTURE_PARALLEL = 1,
  HVO_ARCHITECTURE_SERIES = 2,
} HvoArchitecture;

typedef enum HvoCost {
  HVO_COST_EMISSIONS = 0,
  HVO_COST_FUEL = 1,
} HvoCost;

typedef enum HvoStatus {
  HVO_STATUS_OK = 0,
  HVO_STATUS_NULL_POINTER = 1,
  HVO_STATUS_INVALID_ARGUMENT = 2,
  HVO_STATUS_IO = 3,
  HVO_STATUS_PARSE = 4,
  HVO_STATUS_VALIDATION = 5,
  HVO_STATUS_INFEASIBLE = 6,
  HVO_STATUS_VERIFICATION = 7,
  HVO_STATUS_PANIC = 8,
} HvoStatus;

typedef struct HvoMission HvoMission;

typedef struct HvoPlant HvoPlant;

typedef struct HvoRun HvoRun;

/**
 * DP grid sizes and the initial SOC; fill with [`hvo_grid_default`].
 */
typedef struct HvoGrid {
  size_t soc_nodes;
  size_t speed_nodes;
  size_t alpha_nodes;
  size_t phi_nodes;
  double soc_initial;
} HvoGrid;

/**
 * Mission-average results of a run.
 */
typedef struct HvoSummary {
  double fuel_lph;
  double nox_gph;
  double hc_gph;
  double dsoc;
  double engine_on_fraction;
  size_t steps;
} HvoSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next `hvo_*` call on the same thread.
 */
const char *hvo_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hvo_version(void);

/**
 * # Safety
 * `out` must be a valid pointer to writable memory.
 */
enum HvoStatus hvo_grid_default(struct HvoGrid *out);

/**
 * Builds the plant shipped with the library for `arch`.
 *
 * # Safety
 * `out` must be a valid pointer; on success it receives a handle to free
 * with [`hvo_plant_free`].
 */
enum HvoStatus hvo_plant_bundled(enum HvoArchitecture arch, struct HvoPlant **out);

/**
 * Loads and builds a plant from a JSON config file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HvoStatus hvo_plant_load(const char *path, struct HvoPlant **out);

/**
 * # Safety
 * `plant` must be NULL or a handle from this library not yet freed.
 */
void hvo_plant_free(struct HvoPlant *plant);

/**
 * Synthesises the demo mission with the given seed.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum HvoStatus hvo_mission_demo(uint64_t seed, struct HvoMission **out);

/**
 * Loads a mission CSV (`t,omega_prop,torque_prop[,segment]`).
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HvoStatus hvo_mission_load(const char *path, struct HvoMission **out);

/**
 * Number of samples, or 0 for NULL.
 *
 * # Safety
 * `mission` must be NULL or a live handle.
 */
size_t hvo_mission_len(const struct HvoMission *mission);

/**
 * # Safety
 * `mission` must be NULL or a handle from this library not yet freed.
 */
void hvo_mission_free(struct HvoMission *mission);

/**
 * Simulates (conventional) or optimises (hybrids) `plant` on `mission`.
 * `grid` may be NULL for the default grids; `mu` is ignored for fuel cost.
 *
 * # Safety
 * `plant` and `mission` must be live handles, `grid` NULL or valid, and
 * `out` a valid pointer; on success it receives a handle to free with
 * [`hvo_run_free`].
 */
enum HvoStatus hvo_run(const struct HvoPlant *plant,
                       const struct HvoMission *mission,
                       enum HvoCost cost,
                       double mu,
                       const struct HvoGrid *grid,
                       struct HvoRun **out);

/**
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum HvoStatus hvo_run_summary(const struct HvoRun *run, struct HvoSummary *out);

/**
 * Writes `report.json`, `report.csv` and `trajectory.csv` into `dir`,
 * creating it if needed.
 *
 * # Safety
 * `run` must be a live handle and `dir` a NUL-terminated string.
 */
enum HvoStatus hvo_run_write(const struct HvoRun *run, const char *dir);

/**
 * # Safety
 * `run` must be NULL or a handle from this library not yet freed.
 */
void hvo_run_free(struct HvoRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HVO_H */
