// One line per acceptance criterion; exit status 1 when any criterion fails.

#include <pfpt/acceptance.hpp>

#include <cstdio>
#include <cstring>

int main(int argc, char** argv) {
  pfpt::AcceptanceOptions options;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--quick") == 0) options.quick = true;
  options.on_result = [](const pfpt::CriterionResult& r) {
    std::printf("%s\n", pfpt::format_result(r).c_str());
    std::fflush(stdout);
  };
  const auto results = pfpt::run_acceptance(options);
  const bool ok = pfpt::all_passed(results);
  std::printf("acceptance: %s\n", ok ? "all criteria passed" : "FAILED");
  return ok ? 0 : 1;
}
