// One PASS/FAIL line per acceptance criterion. Arguments select criteria
// (ids or slugs); default is all of them.

#include <iostream>
#include <string>
#include <vector>

#include "tlab/acceptance.hpp"
#include "tlab/config.hpp"

int main(int argc, char** argv) {
  std::vector<const tlab::CriterionInfo*> todo;
  for (int i = 1; i < argc; ++i) todo.push_back(&tlab::find_criterion(argv[i]));
  if (todo.empty())
    for (const auto& c : tlab::acceptance_criteria()) todo.push_back(&c);

  int failed = 0;
  for (const auto* c : todo) {
    tlab::CriterionResult r;
    try {
      const auto cfg = tlab::load_config(tlab::criterion_config_path(*c, TLAB_CONFIG_DIR));
      r = tlab::run_criterion(cfg, &std::cerr);
    } catch (const std::exception& e) {
      r.id = c->id;
      r.slug = c->slug;
      r.detail = std::string("error: ") + e.what();
    }
    std::cout << tlab::format_result(r) << std::endl;
    failed += r.pass ? 0 : 1;
  }
  std::cout << (todo.size() - failed) << "/" << todo.size() << " criteria pass" << std::endl;
  return failed == 0 ? 0 : 1;
}
