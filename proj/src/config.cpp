#include "ioi/config.hpp"

#include <fstream>
#include <sstream>

#include "ioi/error.hpp"
#include "json.hpp"

namespace ioi {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw ConfigError("config: " + msg); }

void check_keys(const json& obj, const char* section,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (item.key() == a) {
                known = true;
                break;
            }
        if (!known) bad("unknown key \"" + item.key() + "\" in " + section);
    }
}

double num(const json& j, const std::string& name) {
    if (!j.is_number()) bad(name + " must be a number");
    return j.get<double>();
}

int integer(const json& j, const std::string& name) {
    if (!j.is_number_integer()) bad(name + " must be an integer");
    return j.get<int>();
}

uint64_t uinteger(const json& j, const std::string& name) {
    if (j.is_number_unsigned()) return j.get<uint64_t>();
    if (j.is_number_integer() && j.get<int64_t>() >= 0) return (uint64_t)j.get<int64_t>();
    bad(name + " must be a non-negative integer");
}

std::string str(const json& j, const std::string& name) {
    if (!j.is_string()) bad(name + " must be a string");
    return j.get<std::string>();
}

}  // namespace

Direction direction_from_name(const std::string& name) {
    if (name == "increase") return Direction::increase;
    if (name == "decrease") return Direction::decrease;
    throw ConfigError("unknown direction: " + name + " (expected increase or decrease)");
}

std::string direction_name(Direction d) {
    return d == Direction::increase ? "increase" : "decrease";
}

AttackConfig RunConfig::attack_config(bool video) const {
    AttackConfig cfg;
    cfg.epsilon = epsilon;
    cfg.f = video ? f_for_video() : f_for_image();
    cfg.iterations = iterations;
    cfg.direction = direction;
    return cfg;
}

void RunConfig::validate() const {
    if (metric_name != "toy_laplace" && metric_name != "toy_cnn")
        throw ConfigError("unknown metric: " + metric_name +
                          " (expected toy_laplace or toy_cnn)");
    attack_kind_from_name(attack_name);  // throws on an unknown attack
    if (epsilon < 0.0) bad("epsilon must be >= 0");
    if (f && !(*f > 0.0 && *f < 1.0)) bad("f must lie in (0,1)");
    if (iterations < 1) bad("iterations must be >= 1");
    if (!(d > 0.0)) bad("align step d must be > 0");
    if (n_stop < 1) bad("n_stop must be >= 1");
    if (range_lo.has_value() != range_hi.has_value()) bad("metric range needs both endpoints");
    if (range_lo && !(*range_lo < *range_hi)) bad("metric range must have lo < hi");
}

RunConfig parse_config_json(const std::string& text, RunConfig base) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        bad(std::string("not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) bad("top level must be an object");
    check_keys(doc, "top level", {"metric", "attack", "align", "io", "seed"});

    RunConfig cfg = std::move(base);

    if (doc.contains("metric")) {
        const json& m = doc["metric"];
        if (!m.is_object()) bad("metric must be an object");
        check_keys(m, "metric", {"name", "seed", "range"});
        if (m.contains("name")) cfg.metric_name = str(m["name"], "metric.name");
        if (m.contains("seed")) cfg.metric_seed = uinteger(m["seed"], "metric.seed");
        if (m.contains("range")) {
            const json& r = m["range"];
            if (!r.is_array() || r.size() != 2) bad("metric.range must be a [lo,hi] pair");
            cfg.range_lo = num(r[0], "metric.range[0]");
            cfg.range_hi = num(r[1], "metric.range[1]");
        }
    }

    if (doc.contains("attack")) {
        const json& a = doc["attack"];
        if (!a.is_object()) bad("attack must be an object");
        check_keys(a, "attack", {"name", "epsilon", "f", "iterations", "direction"});
        if (a.contains("name")) cfg.attack_name = str(a["name"], "attack.name");
        if (a.contains("epsilon")) cfg.epsilon = num(a["epsilon"], "attack.epsilon");
        if (a.contains("f")) cfg.f = num(a["f"], "attack.f");
        if (a.contains("iterations"))
            cfg.iterations = integer(a["iterations"], "attack.iterations");
        if (a.contains("direction"))
            cfg.direction = direction_from_name(str(a["direction"], "attack.direction"));
    }

    if (doc.contains("align")) {
        const json& al = doc["align"];
        if (!al.is_object()) bad("align must be an object");
        check_keys(al, "align", {"rg_target", "d", "n_stop"});
        if (al.contains("rg_target")) cfg.rg_target = num(al["rg_target"], "align.rg_target");
        if (al.contains("d")) cfg.d = num(al["d"], "align.d");
        if (al.contains("n_stop")) cfg.n_stop = integer(al["n_stop"], "align.n_stop");
    }

    if (doc.contains("io")) {
        const json& io = doc["io"];
        if (!io.is_object()) bad("io must be an object");
        check_keys(io, "io", {"input", "output", "frame_pattern"});
        if (io.contains("input")) cfg.input = str(io["input"], "io.input");
        if (io.contains("output")) cfg.output = str(io["output"], "io.output");
        if (io.contains("frame_pattern"))
            cfg.frame_pattern = str(io["frame_pattern"], "io.frame_pattern");
    }

    if (doc.contains("seed")) cfg.seed = uinteger(doc["seed"], "seed");
    return cfg;
}

RunConfig load_config(const std::string& path, RunConfig base) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_json(buffer.str(), std::move(base));
}

std::string config_echo(const RunConfig& cfg) {
    json doc;
    doc["metric"] = {{"name", cfg.metric_name}, {"seed", cfg.metric_seed}};
    doc["metric"]["range"] =
        cfg.range_lo ? json::array({*cfg.range_lo, *cfg.range_hi}) : json();
    doc["attack"] = {{"name", cfg.attack_name},
                     {"epsilon", cfg.epsilon},
                     {"f", cfg.f ? json(*cfg.f) : json()},
                     {"iterations", cfg.iterations},
                     {"direction", direction_name(cfg.direction)}};
    doc["align"] = {{"rg_target", cfg.rg_target}, {"d", cfg.d}, {"n_stop", cfg.n_stop}};
    doc["io"] = {{"input", cfg.input},
                 {"output", cfg.output},
                 {"frame_pattern", cfg.frame_pattern}};
    doc["seed"] = cfg.seed;
    return doc.dump(2);
}

}  // namespace ioi
