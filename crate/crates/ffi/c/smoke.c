#include <stdio.h>
#include "cxlab.h"

int main(void) {
    size_t d = 0;
    if (cxlab_lcp_depth("0110", "0101", &d) != CXLAB_STATUS_OK || d != 2) {
        return 1;
    }
    CxlabBitreeInstance *inst = NULL;
    if (cxlab_bitree_instance_new(16, &inst) != CXLAB_STATUS_OK) {
        char *msg = cxlab_last_error_message();
        fprintf(stderr, "%s\n", msg);
        cxlab_string_free(msg);
        return 1;
    }
    CxlabEquilibrium *eq = NULL;
    double cap = 0.0;
    cxlab_equilibrium_solve(inst, 1e-10, 200000, true, &eq);
    cxlab_equilibrium_cap(eq, &cap);
    printf("cap %.12g\n", cap);
    cxlab_equilibrium_free(eq);
    cxlab_bitree_instance_free(inst);
    return 0;
}
