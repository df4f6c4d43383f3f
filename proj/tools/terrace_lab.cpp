// terrace-lab: run experiments, list presets, reproduce acceptance criteria.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "tlab/acceptance.hpp"
#include "tlab/config.hpp"
#include "tlab/error.hpp"
#include "tlab/experiment.hpp"

namespace fs = std::filesystem;

namespace {

#ifndef TLAB_CONFIG_DIR
#define TLAB_CONFIG_DIR "configs"
#endif

int severity(int code) { return code == 1 ? 2 : (code == 2 ? 1 : 0); }
int worse(int a, int b) { return severity(a) >= severity(b) ? a : b; }

class SyncLog : public std::stringbuf {
 public:
  explicit SyncLog(std::mutex& m) : m_(m) {}
  int sync() override {
    std::lock_guard<std::mutex> lock(m_);
    std::cerr << str();
    str("");
    return 0;
  }

 private:
  std::mutex& m_;
};

int cmd_run(const std::vector<std::string>& files, const std::vector<std::string>& sets, int jobs, bool quiet) {
  std::vector<tlab::ExperimentConfig> cfgs;
  int status = 0;
  for (const auto& f : files) {
    try {
      cfgs.push_back(tlab::load_config(f, sets, false));
    } catch (const tlab::ConfigError& e) {
      std::cerr << e.what() << "\n";
      status = 1;
    }
  }
  if (status) return status;
  if (const char* env = std::getenv("TERRACE_LAB_OUT"); env && *env && cfgs.size() > 1)
    for (auto& c : cfgs) {
      c.output_dir = (fs::path(env) / fs::path(c.source).stem()).string();
      c.resolved["output_dir"] = c.output_dir;
    }

  std::vector<int> codes(cfgs.size(), 0);
  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    SyncLog buf(log_mutex);
    std::ostream log(&buf);
    for (std::size_t k = next++; k < cfgs.size(); k = next++) {
      const auto res = tlab::run_experiment(cfgs[k], quiet ? nullptr : &log, cfgs.size() == 1 ? jobs : 1);
      codes[k] = res.exit_code;
      std::lock_guard<std::mutex> lock(log_mutex);
      std::cout << cfgs[k].source << ": exit " << res.exit_code << " -> " << cfgs[k].output_dir << "\n";
      for (const auto& h : res.hard_failures) std::cout << "  hard: " << h << "\n";
      for (const auto& s : res.soft) std::cout << "  soft: " << s << "\n";
    }
  };
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(cfgs.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (int c : codes) status = worse(status, c);
  return status;
}

int cmd_presets(const std::string& name) {
  if (name.empty()) {
    tlab::list_presets(std::cout);
    return 0;
  }
  try {
    const auto& p = tlab::find_preset(name);
    std::cout << p.name << "  (" << p.family << ")\n    " << p.summary << "\n    anchor: " << p.anchor
              << "\n    params: " << p.params.dump() << "\n";
    return 0;
  } catch (const tlab::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}

int cmd_accept(const std::vector<std::string>& ids, const std::string& config_dir, const std::vector<std::string>& sets,
               int jobs, bool quiet) {
  std::vector<const tlab::CriterionInfo*> todo;
  try {
    for (const auto& id : ids) {
      if (id == "all") {
        for (const auto& c : tlab::acceptance_criteria()) todo.push_back(&c);
      } else {
        todo.push_back(&tlab::find_criterion(id));
      }
    }
  } catch (const tlab::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  int status = 0;
  for (const auto* c : todo) {
    tlab::CriterionResult r;
    try {
      auto cfg = tlab::load_config(tlab::criterion_config_path(*c, config_dir), sets);
      if (cfg.criterion != c->id) throw tlab::ConfigError("criterion", "config file is for criterion " +
                                                                            std::to_string(cfg.criterion));
      r = tlab::run_criterion(cfg, quiet ? nullptr : &std::cerr, jobs);
    } catch (const std::exception& e) {
      r.id = c->id;
      r.slug = c->slug;
      r.detail = std::string("error: ") + e.what();
    }
    std::cout << tlab::format_result(r) << std::endl;
    if (!r.pass) status = 1;
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Propagating terrace laboratory for periodic reaction-diffusion equations"};
  app.require_subcommand(1);

  std::vector<std::string> files, sets, ids{"all"};
  std::string preset_name, config_dir = TLAB_CONFIG_DIR;
  int jobs = 1;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "Run experiments from JSON config files");
  run->add_option("configs", files, "Config files")->required()->check(CLI::ExistingFile);
  run->add_option("--set", sets, "Dotted-path override, e.g. time.T_final=200");
  run->add_option("-j,--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  run->add_flag("-q,--quiet", quiet, "No progress output");

  auto* presets = app.add_subcommand("presets", "List the model catalog, or show one preset");
  presets->add_option("name", preset_name, "Preset name");

  auto* accept = app.add_subcommand("accept", "Reproduce acceptance criteria (id, slug or `all`)");
  accept->add_option("criteria", ids, "Criterion ids");
  accept->add_option("--config-dir", config_dir, "Directory holding criterion-<id>.json")
      ->check(CLI::ExistingDirectory);
  accept->add_option("--set", sets, "Dotted-path override applied to each criterion config");
  accept->add_option("-j,--jobs", jobs, "Worker threads for multi-run criteria")->check(CLI::PositiveNumber);
  accept->add_flag("-q,--quiet", quiet, "No progress output");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(files, sets, jobs, quiet);
  if (presets->parsed()) return cmd_presets(preset_name);
  if (accept->parsed()) return cmd_accept(ids, config_dir, sets, jobs, quiet);
  return 1;
}
