// Acceptance suite: runs every verification criterion at full budget and
// prints one PASS/FAIL line per criterion. Exit status 0 iff all pass.

#include <cstdio>
#include <cstring>

#include "lobeq/verify.hpp"

int main(int argc, char** argv) {
    lobeq::verify::VerifyOptions opt;
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--quick") == 0) opt.quick = true;

    const auto results = lobeq::verify::run_verification(opt);
    bool ok = true;
    for (const auto& r : results) {
        std::printf("%s  %s  %s — %s\n", r.id.c_str(), r.pass ? "PASS" : "FAIL",
                    r.label.c_str(), r.detail.c_str());
        ok = ok && r.pass;
    }
    std::printf("%s\n", ok ? "acceptance: all criteria passed" : "acceptance: FAILURES present");
    return ok ? 0 : 1;
}
