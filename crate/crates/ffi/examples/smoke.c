#include <stdio.h>
#include "mccs.h"

int main(void) {
    MccsInstance *inst = NULL;
    MccsPlacement *a = NULL;
    MccsFraction r;
    bool equal = false;
    size_t demand[3] = {1, 1, 2};
    bool decoded = false;

    if (mccs_instance_parse(10, 7, "2", &inst) != MCCS_STATUS_OK) {
        fprintf(stderr, "%s\n", mccs_last_error());
        return 1;
    }
    mccs_optimal_placement(inst, &a);
    for (size_t l = 0; l < mccs_placement_len(a); l++) {
        mccs_placement_entry(a, l, &r);
        printf("a_%zu = %lld/%lld\n", l, (long long)r.num, (long long)r.den);
    }
    mccs_expected_rate(inst, a, &r);
    printf("expected = %lld/%lld\n", (long long)r.num, (long long)r.den);
    mccs_verify_theorem(inst, &equal);
    printf("lp = %s\n", equal ? "equal" : "different");
    mccs_placement_free(a);
    mccs_instance_free(inst);

    mccs_instance_new(2, 3, 1, 1, &inst);
    if (mccs_simulate(inst, demand, 3, 7, &r, &decoded) != MCCS_STATUS_OK) {
        fprintf(stderr, "%s\n", mccs_last_error());
        return 1;
    }
    printf("load = %lld/%lld decoded = %d\n", (long long)r.num, (long long)r.den, decoded);
    mccs_instance_free(inst);

    if (mccs_instance_new(2, 3, 5, 1, &inst) != MCCS_STATUS_INVALID_ARGUMENT) return 1;
    printf("error = %s\n", mccs_last_error());
    return 0;
}
