#include <stdio.h>
#include "blowup_ffi.h"

int main(void) {
    double h = 0.0;
    if (blowup_hermite(2, 3.0, &h) != BLOWUP_STATUS_OK || h != 7.0) return 1;
    if (blowup_hermite(99, 0.0, &h) != BLOWUP_STATUS_INVALID_ARGUMENT) return 2;
    char msg[128];
    if (blowup_last_error(msg, sizeof msg) == 0) return 3;

    BlowupConfig *cfg = blowup_config_new();
    if (blowup_config_set(cfg, "horizon", "1") != BLOWUP_STATUS_OK) return 4;
    if (blowup_config_set(cfg, "no_such_key", "1") != BLOWUP_STATUS_UNKNOWN_KEY) return 5;
    double params[4] = {0.0, 0.0, 0.0, 0.0};
    BlowupTrajectory *traj = NULL;
    if (blowup_simulate(cfg, params, &traj) != BLOWUP_STATUS_OK) return 6;
    size_t n = blowup_trajectory_tick_count(traj);
    BlowupTick tick;
    if (blowup_trajectory_tick(traj, n - 1, &tick) != BLOWUP_STATUS_OK) return 7;
    printf("%zu ticks, last s = %.3f\n", n, tick.s);
    blowup_trajectory_free(traj);
    blowup_config_free(cfg);
    return n == 11 ? 0 : 8;
}
