// Prints one PASS/FAIL line per acceptance criterion. A FAIL is a result, not
// an error: the exit code is non-zero only when a criterion could not run.

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <exception>

#include "criteria.hpp"

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--only", only, "run a single criterion by number");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);

  int errors = 0;
  bool matched = false;
  for (const auto& c : utc::acceptance::all_criteria()) {
    if (only != 0 && c.id != only) continue;
    matched = true;
    const auto start = std::chrono::steady_clock::now();
    try {
      const utc::acceptance::Outcome o = c.run();
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::printf("criterion %d: %s  %s  [%s] (%.1fs)\n", c.id, o.pass ? "PASS" : "FAIL", c.title,
                  o.detail.c_str(), secs);
    } catch (const std::exception& e) {
      std::printf("criterion %d: ERROR  %s  [%s]\n", c.id, c.title, e.what());
      ++errors;
    }
    std::fflush(stdout);
  }
  if (!matched) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  return errors == 0 ? 0 : 1;
}
