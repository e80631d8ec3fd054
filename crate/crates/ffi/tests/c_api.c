#include <math.h>
#include <stdio.h>
#include <string.h>

#include "noisy_dynamics.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__,   \
                    #cond, nd_last_error());                          \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    double entries[4] = {0.75, 0.25, 0.25, 0.75};
    NdMatrix *m = NULL, *p = NULL;
    CHECK(nd_matrix_new(2, entries, 96, &m) == ND_STATUS_OK);
    CHECK(nd_matrix_dim(m) == 2);
    CHECK(nd_matrix_power(m, "1000", 64, 64, &p) == ND_STATUS_OK);
    double v = 0.0;
    CHECK(nd_matrix_get(p, 0, 0, &v) == ND_STATUS_OK);
    /* eigenvalues 1 and 1/2; (1/2)^1000 vanishes, leaving 1/2 */
    CHECK(fabs(v - 0.5) < 1e-15);
    char *json = NULL;
    CHECK(nd_matrix_to_json(p, &json) == ND_STATUS_OK);
    CHECK(strstr(json, "\"n\": 2") != NULL);
    nd_string_free(json);
    nd_matrix_free(p);

    double big[4] = {2.0, 0.0, 0.0, 2.0};
    NdMatrix *b = NULL, *q = NULL;
    CHECK(nd_matrix_new(2, big, 64, &b) == ND_STATUS_OK);
    CHECK(nd_matrix_power(b, "1000000", 64, 64, &q) == ND_STATUS_OVERFLOW);
    CHECK(q == NULL);
    nd_matrix_free(b);
    nd_matrix_free(m);

    CHECK(nd_matrix_get(NULL, 0, 0, &v) == ND_STATUS_NULL_POINTER);
    CHECK(strlen(nd_last_error()) > 0);

    NdSystem *sys = NULL;
    CHECK(nd_system_new("{\"type\":\"polynomial\",\"coeffs\":[\"1/2\"]}", 0.25, 96, &sys) == ND_STATUS_OK);
    NdDensity *d = NULL;
    CHECK(nd_invariant_measure(sys, 1e-3, ND_METHOD_EIGEN, &d) == ND_STATUS_OK);
    double w = 0.0;
    CHECK(nd_density_weight(d, 0.0, 1.0, &w) == ND_STATUS_OK);
    CHECK(fabs(w - 1.0) < 1e-9);
    CHECK(nd_density_weight(d, 0.0, 0.5, &w) == ND_STATUS_OK);
    CHECK(fabs(w - 0.5) < 1e-3);
    nd_density_free(d);
    nd_system_free(sys);

    NdVerdict verdict;
    const char *tm =
        "{\"controls\":[\"q0\",\"acc\",\"rej\"],\"initial\":\"q0\",\"accept\":\"acc\","
        "\"reject\":\"rej\",\"tape_length\":1,"
        "\"delta\":{\"q0,0\":[\"rej\",\"0\",\"S\"],\"q0,1\":[\"rej\",\"1\",\"S\"]}}";
    CHECK(nd_decide(tm, ND_VARIANT_PIECEWISE, &verdict, NULL) == ND_STATUS_OK);
    CHECK(verdict == ND_VERDICT_REJECT);
    printf("ok %s\n", nd_version());
    return 0;
}
