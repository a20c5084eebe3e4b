#include <stdio.h>
#include <stdlib.h>

#include "haptofem.h"

#define CHECK(call)                                                              \
  do {                                                                           \
    HfStatus st_ = (call);                                                       \
    if (st_ != HF_STATUS_OK) {                                                   \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)st_, hf_last_error_message()); \
      return 1;                                                                  \
    }                                                                            \
  } while (0)

int main(void) {
  HfMesh *mesh = NULL;
  HfSimulation *sim = NULL;
  CHECK(hf_mesh_unit_square(8, &mesh));
  size_t nv = hf_mesh_num_vertices(mesh);
  CHECK(hf_simulation_new(mesh, HF_SCHEME_UVMS, HF_PROBLEM_TEST1, 0.0, 0.01, 1e-12, true, 0, &sim));
  hf_mesh_free(mesh);
  CHECK(hf_simulation_step(sim, 5));

  double *u = malloc(nv * sizeof(double));
  CHECK(hf_simulation_copy_field(sim, HF_FIELD_U, u, nv));
  double lo = u[0];
  for (size_t i = 1; i < nv; i++) lo = u[i] < lo ? u[i] : lo;
  free(u);

  if (hf_simulation_copy_field(sim, HF_FIELD_SIGMA_X, NULL, 0) != HF_STATUS_NULL_POINTER) return 2;
  printf("nodes=%zu steps=%zu time=%.2f min_u_nonneg=%d\n", nv, hf_simulation_step_index(sim),
         hf_simulation_time(sim), lo >= 0.0);
  hf_simulation_free(sim);
  return 0;
}
