#ifndef HAPTOFEM_H
#define HAPTOFEM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum {
  HF_STATUS_OK = 0,
  HF_STATUS_NULL_POINTER = 1,
  HF_STATUS_INVALID_ARGUMENT = 2,
  // Mesh file could not be parsed or describes an invalid mesh.
  HF_STATUS_MESH = 3,
  // Output buffer length does not match the field size.
  HF_STATUS_BUFFER_SIZE = 4,
  // Linear solver did not converge or produced non-finite values.
  HF_STATUS_SOLVER = 5,
  // A positivity or state precondition of the scheme was violated.
  HF_STATUS_STATE = 6,
  HF_STATUS_IO = 7,
  HF_STATUS_PANIC = 8,
} HfStatus;

enum HfScheme
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : uint32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  HF_SCHEME_UVM_SIGMA = 0,
  HF_SCHEME_UVMS = 1,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum HfScheme HfScheme;
#else
typedef uint32_t HfScheme;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

enum HfProblem
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : uint32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  // Homogeneous matrix, Gaussian tumour in the centre.
  HF_PROBLEM_TEST1 = 0,
  // Heterogeneous matrix.
  HF_PROBLEM_TEST2 = 1,
  // All initial data zero.
  HF_PROBLEM_ZERO = 2,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum HfProblem HfProblem;
#else
typedef uint32_t HfProblem;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Nodal arrays that can be copied out of a simulation.
enum HfField
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : uint32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  HF_FIELD_U = 0,
  HF_FIELD_V = 1,
  HF_FIELD_M = 2,
  // Only for [`HfScheme::Uvms`].
  HF_FIELD_S = 3,
  // Only for [`HfScheme::UvmSigma`]; first component.
  HF_FIELD_SIGMA_X = 4,
  // Only for [`HfScheme::UvmSigma`]; second component.
  HF_FIELD_SIGMA_Y = 5,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum HfField HfField;
#else
typedef uint32_t HfField;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Opaque triangle mesh.
typedef struct HfMesh HfMesh;

// Opaque running simulation.
typedef struct HfSimulation HfSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL.
//
// The pointer stays valid until the next failing call on the same thread.
const char *hf_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *hf_version(void);

// Structured mesh of the unit square with `n` cells per side.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
HfStatus hf_mesh_unit_square(size_t n, HfMesh **out);

// Reads a mesh file (`nv nt`, vertex lines, 0-based triangle lines).
//
// # Safety
// `path` must be a NUL-terminated string; `out` as for [`hf_mesh_unit_square`].
HfStatus hf_mesh_read(const char *path, HfMesh **out);

// # Safety
// `mesh` must be NULL or a handle from this library that has not been freed.
void hf_mesh_free(HfMesh *mesh);

// Vertex count, or 0 for NULL.
//
// # Safety
// `mesh` must be NULL or a live handle.
size_t hf_mesh_num_vertices(const HfMesh *mesh);

// Triangle count, or 0 for NULL.
//
// # Safety
// `mesh` must be NULL or a live handle.
size_t hf_mesh_num_triangles(const HfMesh *mesh);

// Copies interleaved `x y` coordinates; `len` must be 2 × vertex count.
//
// # Safety
// `mesh` must be a live handle and `buf` valid for `len` writes.
HfStatus hf_mesh_vertices(const HfMesh *mesh, double *buf, size_t len);

// Writes the mesh to a file in the format read by [`hf_mesh_read`].
//
// # Safety
// `mesh` must be a live handle and `path` a NUL-terminated string.
HfStatus hf_mesh_write(const HfMesh *mesh, const char *path);

// Starts a run at t = 0 with the built-in parameters of `problem`.
//
// `scheme` is an [`HfScheme`], `problem` an [`HfProblem`]. `tol` is the
// relative CG residual target; `threads` = 0 assembles sequentially.
// The mesh handle may be freed afterwards.
//
// # Safety
// `mesh` must be a live handle and `out` valid for one write.
HfStatus hf_simulation_new(const HfMesh *mesh,
                           uint32_t scheme,
                           uint32_t problem,
                           double mu_u,
                           double dt,
                           double tol,
                           bool jacobi,
                           size_t threads,
                           HfSimulation **out);

// # Safety
// `sim` must be NULL or a live handle.
void hf_simulation_free(HfSimulation *sim);

// Advances `steps` time steps; stops at the first failure.
//
// # Safety
// `sim` must be a live handle.
HfStatus hf_simulation_step(HfSimulation *sim, size_t steps);

// Current time, or NaN for NULL.
//
// # Safety
// `sim` must be NULL or a live handle.
double hf_simulation_time(const HfSimulation *sim);

// Number of completed steps, or 0 for NULL.
//
// # Safety
// `sim` must be NULL or a live handle.
size_t hf_simulation_step_index(const HfSimulation *sim);

// Number of mesh vertices of the simulation, or 0 for NULL.
//
// # Safety
// `sim` must be NULL or a live handle.
size_t hf_simulation_num_nodes(const HfSimulation *sim);

// Copies the nodal values of `field` (an [`HfField`]); `len` must equal the
// vertex count.
//
// # Safety
// `sim` must be a live handle and `buf` valid for `len` writes.
HfStatus hf_simulation_copy_field(const HfSimulation *sim, uint32_t field, double *buf, size_t len);

// Nodal minimum of `field`, written to `out`.
//
// # Safety
// `sim` must be a live handle and `out` valid for one write.
HfStatus hf_simulation_field_min(const HfSimulation *sim, uint32_t field, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HAPTOFEM_H */
