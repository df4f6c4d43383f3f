#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "tlab/acceptance.hpp"
#include "tlab/config.hpp"
#include "tlab/error.hpp"
#include "tlab/experiment.hpp"

using namespace tlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ConfigError config_error(const std::string& text, const std::vector<std::string>& sets = {}) {
  try {
    parse_config(text, "test.json", sets);
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected ConfigError");
  return ConfigError("", "");
}

bool has_field(const ConfigError& e, const std::string& f) {
  for (const auto& x : e.fields())
    if (x == f) return true;
  return false;
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), dir).string()] = ss.str();
  }
  return out;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("minimal config fills defaults") {
    const auto cfg = parse_config(R"({"model": {"preset": "kpp"}})", "kpp.json");
    CHECK(cfg.preset == "kpp");
    CHECK(cfg.domain.dx == doctest::Approx(1.0 / 64));
    CHECK(cfg.dt == doctest::Approx(0.01));
    CHECK(cfg.T_final == 120.0);
    CHECK(cfg.domain.x_left <= cfg.heaviside_a - 10.0);
    CHECK(cfg.domain.x_right >= cfg.heaviside_a + 2.0 * cfg.T_final);
    CHECK(cfg.output_dir == "out/kpp");
    CHECK(cfg.resolved["derived"]["K"].get<double>() == doctest::Approx(1.0));
    CHECK(cfg.observers.size() == 5);

    // The resolved form reloads to the same thing.
    const auto again = parse_config(cfg.resolved.dump(), "kpp.json");
    CHECK(again.resolved == cfg.resolved);
  }

  TEST_CASE("time step above the monotone limit") {
    const auto e = config_error(R"({"model": {"preset": "kpp"}, "time": {"dt": 2.0}})");
    CHECK(has_field(e, "time.dt"));
    CHECK(std::string(e.what()).find("admissible max is 1") != std::string::npos);
  }

  TEST_CASE("dx must divide the period") {
    const auto e = config_error(R"({"model": {"preset": "kpp"}, "domain": {"dx": 0.3}})");
    CHECK(has_field(e, "domain.dx"));
    CHECK_NOTHROW(parse_config(R"({"model": {"preset": "kpp"}, "domain": {"dx": 0.125}})"));
  }

  TEST_CASE("every problem is reported at once") {
    const auto e = config_error(R"({
      "model": {"preset": "kpp", "colour": 3},
      "time": {"T_final": -1},
      "observers": ["terace"],
      "bogus": true
    })");
    CHECK(has_field(e, "model.colour"));
    CHECK(has_field(e, "time.T_final"));
    CHECK(has_field(e, "observers"));
    CHECK(has_field(e, "bogus"));
    CHECK(std::string(e.what()).find("did you mean `terrace`") != std::string::npos);
  }

  TEST_CASE("parse errors carry line and column") {
    const auto e = config_error("{\n  \"model\": {\"preset\": \"kpp\"},\n  \"time\": {\"T_final\": }\n}");
    CHECK(std::string(e.what()).rfind("test.json:3:", 0) == 0);
  }

  TEST_CASE("model parameter errors name the path") {
    const auto e = config_error(R"({"model": {"preset": "allen_cahn", "params": {"a": 2}}})");
    CHECK(has_field(e, "model.params.a"));
  }

  TEST_CASE("overrides") {
    const auto cfg = parse_config(R"({"model": {"preset": "kpp"}})", "x.json",
                                  {"time.T_final=30", "model.params.r=2", "output_dir=elsewhere"});
    CHECK(cfg.T_final == 30.0);
    CHECK(cfg.params["r"].get<double>() == 2.0);
    CHECK(cfg.output_dir == "elsewhere");

    json doc = json::object();
    apply_override(doc, "a.b.c=[1, 2]");
    CHECK(doc["a"]["b"]["c"] == json::array({1, 2}));
    apply_override(doc, "a.name=word");
    CHECK(doc["a"]["name"] == "word");
    CHECK_THROWS_AS(apply_override(doc, "novalue"), ConfigError);
  }

  TEST_CASE("catalog") {
    const auto& cat = preset_catalog();
    CHECK(cat.size() >= 5);
    for (const auto& p : cat) {
      CAPTURE(p.name);
      CHECK_FALSE(p.criteria.empty());
      CHECK_FALSE(p.anchor.empty());
      CHECK_NOTHROW(resolve_model(p.name, json::object()));
    }
    try {
      find_preset("bistabel");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("did you mean `bistable`") != std::string::npos);
    }
    CHECK(edit_distance("kpp", "kp") == 1);
    CHECK(edit_distance("", "abc") == 3);
  }

  TEST_CASE("criterion lookup") {
    CHECK(find_criterion("3").id == 3);
    CHECK(find_criterion("c7").id == 7);
    CHECK(find_criterion("zero-number").id == 6);
    CHECK_THROWS_AS(find_criterion("11"), ConfigError);
    for (const auto& c : acceptance_criteria()) {
      const auto path = criterion_config_path(c, TLAB_CONFIG_DIR);
      CAPTURE(path);
      REQUIRE(fs::exists(path));
      std::ifstream in(path);
      std::stringstream ss;
      ss << in.rdbuf();
      CHECK(parse_config(ss.str(), path).criterion == c.id);
    }
  }

  TEST_CASE("runs are deterministic") {
    const fs::path dir = fs::temp_directory_path() / "tlab-determinism";
    fs::remove_all(dir);
    const std::string text = R"({"model": {"preset": "bistable"}, "time": {"T_final": 60},
      "observers": ["spreading", "zeronumber"], "output_dir": ")" + dir.string() + "\"}";
    const auto cfg = parse_config(text, "det.json");
    const auto first = run_experiment(cfg);
    CHECK(first.hard_failures.empty());
    const auto files = read_tree(dir);
    CHECK(files.size() >= 3);
    fs::remove_all(dir);
    run_experiment(cfg);
    CHECK(read_tree(dir) == files);
    fs::remove_all(dir);
  }
}
