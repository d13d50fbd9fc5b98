#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "ioi/config.hpp"
#include "ioi/error.hpp"
#include "json.hpp"

using namespace ioi;

TEST_CASE("defaults resolve without a config file") {
    RunConfig cfg;
    CHECK(cfg.metric_name == "toy_cnn");
    CHECK(cfg.metric_seed == 7);
    CHECK(cfg.attack_name == "ioi");
    CHECK(cfg.epsilon == 0.1);
    CHECK_FALSE(cfg.f.has_value());
    CHECK(cfg.f_for_image() == 0.07);
    CHECK(cfg.f_for_video() == 0.05);
    CHECK(cfg.iterations == 1);
    CHECK(cfg.direction == Direction::increase);
    CHECK(cfg.rg_target == 0.05);
    CHECK(cfg.d == 0.005);
    CHECK(cfg.n_stop == 5);
    CHECK(cfg.frame_pattern == "%03d.png");
    CHECK(cfg.seed == 1);
    CHECK_NOTHROW(cfg.validate());

    AttackConfig img = cfg.attack_config(false);
    CHECK(img.f == 0.07);
    AttackConfig vid = cfg.attack_config(true);
    CHECK(vid.f == 0.05);
    CHECK(img.epsilon == 0.1);
    CHECK(img.iterations == 1);
}

TEST_CASE("a full JSON document overrides every default") {
    const std::string text = R"({
        "metric": {"name": "toy_laplace", "seed": 42, "range": [0.0, 1.0]},
        "attack": {"name": "fgsm", "epsilon": 0.25, "f": 0.1,
                   "iterations": 4, "direction": "decrease"},
        "align": {"rg_target": 0.2, "d": 0.01, "n_stop": 3},
        "io": {"input": "in.png", "output": "out", "frame_pattern": "f%04d.png"},
        "seed": 9
    })";
    RunConfig cfg = parse_config_json(text);
    CHECK(cfg.metric_name == "toy_laplace");
    CHECK(cfg.metric_seed == 42);
    CHECK(cfg.range_lo == 0.0);
    CHECK(cfg.range_hi == 1.0);
    CHECK(cfg.attack_name == "fgsm");
    CHECK(cfg.epsilon == 0.25);
    CHECK(cfg.f == 0.1);
    CHECK(cfg.f_for_image() == 0.1);   // explicit f wins for both item kinds
    CHECK(cfg.f_for_video() == 0.1);
    CHECK(cfg.iterations == 4);
    CHECK(cfg.direction == Direction::decrease);
    CHECK(cfg.rg_target == 0.2);
    CHECK(cfg.d == 0.01);
    CHECK(cfg.n_stop == 3);
    CHECK(cfg.input == "in.png");
    CHECK(cfg.output == "out");
    CHECK(cfg.frame_pattern == "f%04d.png");
    CHECK(cfg.seed == 9);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("partial JSON keeps the untouched base values") {
    RunConfig base;
    base.epsilon = 0.3;
    base.input = "keepme";
    RunConfig cfg = parse_config_json(R"({"attack": {"iterations": 2}})", base);
    CHECK(cfg.iterations == 2);
    CHECK(cfg.epsilon == 0.3);       // untouched base survives
    CHECK(cfg.input == "keepme");
    CHECK(cfg.metric_name == "toy_cnn");
}

TEST_CASE("unknown keys are rejected at the top level and inside sections") {
    CHECK_THROWS_AS(parse_config_json(R"({"metrics": {}})"), ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"attack": {"eps": 0.1}})"), ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"align": {"patience": 3}})"), ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"io": {"path": "x"}})"), ConfigError);
}

TEST_CASE("malformed documents and wrong types are config errors") {
    CHECK_THROWS_AS(parse_config_json("{"), ConfigError);
    CHECK_THROWS_AS(parse_config_json("[1,2]"), ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"attack": {"epsilon": "big"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"attack": {"iterations": 1.5}})"), ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"metric": {"seed": -3}})"), ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"metric": {"name": 4}})"), ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"metric": {"range": [1.0]}})"), ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"metric": {"range": "unit"}})"), ConfigError);
}

TEST_CASE("direction names round-trip and reject junk") {
    CHECK(direction_from_name("increase") == Direction::increase);
    CHECK(direction_from_name("decrease") == Direction::decrease);
    CHECK(direction_name(Direction::increase) == "increase");
    CHECK(direction_name(Direction::decrease) == "decrease");
    CHECK_THROWS_AS(direction_from_name("sideways"), ConfigError);
}

TEST_CASE("validate rejects out-of-range values one field at a time") {
    auto broken = [](auto&& mutate) {
        RunConfig cfg;
        mutate(cfg);
        return cfg;
    };
    CHECK_THROWS_AS(broken([](RunConfig& c) { c.metric_name = "vmaf"; }).validate(), ConfigError);
    CHECK_THROWS_AS(broken([](RunConfig& c) { c.attack_name = "uap"; }).validate(), ConfigError);
    CHECK_THROWS_AS(broken([](RunConfig& c) { c.epsilon = -0.1; }).validate(), ConfigError);
    CHECK_THROWS_AS(broken([](RunConfig& c) { c.f = 0.0; }).validate(), ConfigError);
    CHECK_THROWS_AS(broken([](RunConfig& c) { c.f = 1.0; }).validate(), ConfigError);
    CHECK_THROWS_AS(broken([](RunConfig& c) { c.iterations = 0; }).validate(), ConfigError);
    CHECK_THROWS_AS(broken([](RunConfig& c) { c.d = 0.0; }).validate(), ConfigError);
    CHECK_THROWS_AS(broken([](RunConfig& c) { c.n_stop = 0; }).validate(), ConfigError);
    CHECK_THROWS_AS(broken([](RunConfig& c) { c.range_lo = 0.0; }).validate(), ConfigError);
    CHECK_THROWS_AS(broken([](RunConfig& c) {
                        c.range_lo = 1.0;
                        c.range_hi = 0.0;
                    }).validate(),
                    ConfigError);
    CHECK_NOTHROW(broken([](RunConfig& c) { c.epsilon = 0.0; }).validate());  // degenerate no-op
}

TEST_CASE("config echo is deterministic and parses back to the same values") {
    RunConfig cfg;
    cfg.attack_name = "ifgsm";
    cfg.iterations = 3;
    cfg.f = 0.2;
    cfg.range_lo = 0.0;
    cfg.range_hi = 100.0;
    const std::string echo1 = config_echo(cfg);
    CHECK(echo1 == config_echo(cfg));

    nlohmann::json doc = nlohmann::json::parse(echo1);
    CHECK(doc["metric"]["name"] == "toy_cnn");
    CHECK(doc["metric"]["range"][1] == 100.0);
    CHECK(doc["attack"]["name"] == "ifgsm");
    CHECK(doc["attack"]["epsilon"] == 0.1);
    CHECK(doc["attack"]["f"] == 0.2);
    CHECK(doc["attack"]["iterations"] == 3);
    CHECK(doc["attack"]["direction"] == "increase");
    CHECK(doc["align"]["n_stop"] == 5);
    CHECK(doc["seed"] == 1);

    // Unset optionals echo as null.
    RunConfig bare;
    nlohmann::json doc2 = nlohmann::json::parse(config_echo(bare));
    CHECK(doc2["metric"]["range"].is_null());
    CHECK(doc2["attack"]["f"].is_null());

    // The echo is itself a loadable config document.
    RunConfig reparsed = parse_config_json(echo1);
    CHECK(reparsed.attack_name == "ifgsm");
    CHECK(reparsed.f == 0.2);
    CHECK(reparsed.range_hi == 100.0);
}

TEST_CASE("load_config reads a file and reports a missing one as an I/O error") {
    const std::string dir = ref::make_temp_dir("config");
    const std::string path = dir + "/run.json";
    std::ofstream(path) << R"({"attack": {"epsilon": 0.5}})";
    RunConfig cfg = load_config(path);
    CHECK(cfg.epsilon == 0.5);
    CHECK_THROWS_AS(load_config(dir + "/absent.json"), IoError);
    std::filesystem::remove_all(dir);
}
