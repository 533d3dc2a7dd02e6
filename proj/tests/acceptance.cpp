#include <cstdlib>
#include <iostream>
#include <string>

#include "rcg/acceptance.hpp"

int main(int argc, char** argv) {
    rcg::acceptance::Options options;
    if (argc > 1) options.seed = std::stoull(argv[1]);

    const auto results = rcg::acceptance::run_all(options, [](const rcg::acceptance::CriterionResult& r) {
        std::cout << rcg::acceptance::format_line(r) << std::endl;
    });
    int failed = 0;
    for (const auto& r : results) failed += r.passed ? 0 : 1;
    std::cout << (results.size() - failed) << "/" << results.size() << " criteria passed" << std::endl;
    return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
