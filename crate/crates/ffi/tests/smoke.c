#include <stdio.h>

#include "chernwall.h"

int main(void) {
    int64_t chern[3];
    size_t mesh = 0;
    if (cw_chern_numbers(0.0, 0.0, 32, chern, &mesh) != CW_STATUS_OK) {
        fprintf(stderr, "chern: %s\n", cw_last_error_message());
        return 1;
    }
    printf("chern %lld %lld %lld\n", (long long)chern[0], (long long)chern[1], (long long)chern[2]);

    size_t counts[3];
    if (cw_quantum_band_counts(0, 0.0, 0.0, counts) != CW_STATUS_INVALID_J || cw_last_error_message() == NULL) {
        return 1;
    }

    CwDomainChart *chart = NULL;
    if (cw_domain_chart_build(-0.2, 0.2, -0.5, 0.5, 0.02, 16, &chart) != CW_STATUS_OK) {
        fprintf(stderr, "chart: %s\n", cw_last_error_message());
        return 1;
    }
    CwDomain d;
    if (cw_domain_chart_len(chart) != 1 || cw_domain_chart_get(chart, 0, &d) != CW_STATUS_OK || !d.consistent) {
        return 1;
    }
    char *json = cw_domain_chart_to_json(chart);
    printf("domains %zu json %s\n", cw_domain_chart_len(chart), json ? "ok" : "null");
    cw_string_free(json);
    cw_domain_chart_free(chart);
    printf("version %s\n", cw_version());
    return 0;
}
