#pragma once

#include <functional>
#include <string>
#include <vector>

namespace utc::acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

std::vector<Criterion> all_criteria();

}  // namespace utc::acceptance
