/* Build: cc demo.c -I../include -L<target>/debug -ldeltafinger_ffi -lm -lpthread -ldl */
#include <stdio.h>
#include "deltafinger.h"

int main(void) {
    DfGeometry *g = df_geometry_default();
    double p[3] = {0.0, 0.0, -0.04}, t[3], q[3];
    int32_t chain = -1;
    if (df_inverse_kinematics(g, p, t, &chain) != DF_STATUS_OK) {
        return 1;
    }
    if (df_forward_kinematics(g, t, q) != DF_STATUS_OK) {
        return 1;
    }
    printf("%.9f %.9f %.9f\n", t[0], t[1], t[2]);

    double far[3] = {0.5, 0.0, 0.0};
    DfStatus s = df_inverse_kinematics(g, far, t, &chain);
    char msg[64];
    df_last_error_message(msg, sizeof msg);
    printf("%d %d %s\n", (int)s, (int)chain, msg);
    df_geometry_free(g);
    return 0;
}
