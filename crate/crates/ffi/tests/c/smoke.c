#include <stdio.h>
#include <string.h>

#include "symchain.h"

#define CHECK(cond)                                                  \
    do {                                                             \
        if (!(cond)) {                                               \
            const char *e = symchain_last_error();                   \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__,  \
                    #cond, e ? e : "no error");                      \
            return 1;                                                \
        }                                                            \
    } while (0)

int main(int argc, char **argv) {
    SymchainModel *model = NULL;
    SymchainReport *report = NULL;
    char *text = NULL;
    size_t count = 0, level = 0;
    SymchainTermination kind;
    bool equal = false;

    CHECK(argc == 2);
    CHECK(symchain_model_load(argv[1], &model) == SYMCHAIN_STATUS_OK);
    CHECK(symchain_analyze(model, NULL, &report) == SYMCHAIN_STATUS_OK);
    CHECK(symchain_report_termination(report, &kind, &level) == SYMCHAIN_STATUS_OK);
    CHECK(kind == SYMCHAIN_TERMINATION_NONSINGULAR && level == 4);
    CHECK(symchain_report_constraint_count(report, &count) == SYMCHAIN_STATUS_OK);
    CHECK(count == 4);
    CHECK(symchain_report_determinant(report, &text) == SYMCHAIN_STATUS_OK);
    CHECK(strcmp(text, "16") == 0);
    printf("det %s\n", text);
    symchain_string_free(text);
    symchain_report_free(report);

    SymchainOptions opts = symchain_options_default();
    CHECK(symchain_compare(model, &opts, &equal, NULL) == SYMCHAIN_STATUS_OK);
    CHECK(equal);
    symchain_model_free(model);

    CHECK(symchain_lattice_schwinger(4, 1, 1, SYMCHAIN_SCHEME_CENTRAL, &model) ==
          SYMCHAIN_STATUS_INVALID_ARGUMENT);
    CHECK(symchain_last_error() != NULL);
    puts("ok");
    return 0;
}
