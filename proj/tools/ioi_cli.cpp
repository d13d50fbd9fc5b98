// Command-line front end: attack images and frame sequences, align attack
// strength to a relative-gain target, sweep frame budgets, evaluate crop/resize
// defences, dump weight maps, stress the perturbation bound, and emit CSV/JSON
// reports. Exit codes: 0 ok, 2 config error, 3 I/O error, 4 invariant
// violation (perturbation-bound falsification).
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ioi/attacks.hpp"
#include "ioi/config.hpp"
#include "ioi/harness.hpp"
#include "ioi/png_io.hpp"
#include "ioi/rng.hpp"
#include "ioi/spectral.hpp"
#include "ioi/weighting.hpp"

namespace {

using namespace ioi;

// Flags shared by every subcommand; only set values override the JSON config.
struct Overrides {
    std::optional<std::string> config_path;
    std::optional<std::string> metric;
    std::optional<uint64_t> metric_seed;
    std::optional<std::string> attack;
    std::optional<double> epsilon;
    std::optional<double> f;
    std::optional<int> iterations;
    std::optional<std::string> direction;
    std::optional<double> rg_target;
    std::optional<double> d;
    std::optional<int> n_stop;
    std::optional<std::string> input;
    std::optional<std::string> output;
    std::optional<std::string> frame_pattern;
    std::optional<uint64_t> seed;
    bool step_clamp = false;

    // subcommand extras
    std::optional<int> stride;
    int threads = 0;
    std::vector<int> strides = {1, 2, 4, 8};
    std::string adversarial_dir;
    double fraction = 0.8;
    std::string weight_kind = "ioi";
    int sweep_images = 200;
    int synthetic = 0;
    std::vector<std::string> report_attacks;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--metric", o.metric, "metric oracle: toy_laplace or toy_cnn");
    cmd->add_option("--metric-seed", o.metric_seed, "seed for seeded metrics");
    cmd->add_option("--attack", o.attack, "ioi, fgsm, ifgsm, nvw-fgsm or sobel-fgsm");
    cmd->add_option("--epsilon", o.epsilon, "attack strength");
    cmd->add_option("--f", o.f, "retained low-frequency fraction in (0,1)");
    cmd->add_option("--iterations", o.iterations, "gradient steps per attacked item");
    cmd->add_option("--direction", o.direction, "increase or decrease the score");
    cmd->add_option("--rg-target", o.rg_target, "relative-gain target for align");
    cmd->add_option("--d", o.d, "align search step");
    cmd->add_option("--n-stop", o.n_stop, "align stagnation horizon");
    cmd->add_option("--input,-i", o.input, "input image or frame directory");
    cmd->add_option("--output,-o", o.output, "output image, directory or report directory");
    cmd->add_option("--frame-pattern", o.frame_pattern, "printf-style frame name (%03d.png)");
    cmd->add_option("--seed", o.seed, "master seed");
}

RunConfig resolve(const Overrides& o) {
    RunConfig cfg;
    if (o.config_path) cfg = load_config(*o.config_path, cfg);
    if (o.metric) cfg.metric_name = *o.metric;
    if (o.metric_seed) cfg.metric_seed = *o.metric_seed;
    if (o.attack) cfg.attack_name = *o.attack;
    if (o.epsilon) cfg.epsilon = *o.epsilon;
    if (o.f) cfg.f = *o.f;
    if (o.iterations) cfg.iterations = *o.iterations;
    if (o.direction) cfg.direction = direction_from_name(*o.direction);
    if (o.rg_target) cfg.rg_target = *o.rg_target;
    if (o.d) cfg.d = *o.d;
    if (o.n_stop) cfg.n_stop = *o.n_stop;
    if (o.input) cfg.input = *o.input;
    if (o.output) cfg.output = *o.output;
    if (o.frame_pattern) cfg.frame_pattern = *o.frame_pattern;
    if (o.seed) cfg.seed = *o.seed;
    cfg.ifgsm_step_clamp = o.step_clamp;
    cfg.validate();
    return cfg;
}

const std::string& require_input(const RunConfig& cfg) {
    if (cfg.input.empty()) throw ConfigError("an input path is required (--input or io.input)");
    return cfg.input;
}

void print_kv(const char* key, double v) { std::printf("%s=%.9g\n", key, v); }

AttackRecord run_single(const RunConfig& cfg, const Image& img, const GradientOracle& oracle) {
    const AttackKind kind = attack_kind_from_name(cfg.attack_name);
    if (kind == AttackKind::ifgsm && cfg.ifgsm_step_clamp) {
        // per-step clamped variant bypasses the stock dispatcher
        AttackRecord rec;
        Image raw = i_fgsm(img, oracle, cfg.epsilon, cfg.iterations, cfg.direction,
                           /*per_step_clamp=*/true);
        rec.adversarial = clamp_unit(raw);
        rec.linf = linf_distance(rec.adversarial, img);
        rec.bound_ok = true;
        rec.mae_star_pert = mae_star(rec.adversarial, img);
        rec.rg = relative_gain(oracle.score(rec.adversarial), oracle.score(img));
        return rec;
    }
    return run_attack(kind, img, oracle, cfg.attack_config(/*video=*/false));
}

int cmd_attack(const RunConfig& cfg) {
    Image img = load_png(require_input(cfg));
    auto oracle = make_oracle(cfg.metric_name, cfg.metric_seed);
    AttackRecord rec = run_single(cfg, img, *oracle);
    if (attack_kind_from_name(cfg.attack_name) == AttackKind::ioi && !rec.bound_ok)
        throw InvariantViolation("perturbation bound falsified: linf " +
                                 std::to_string(rec.linf) + " vs allowance " +
                                 std::to_string((1.0 - cfg.f_for_image()) * rec.mae_star_pert));
    if (!cfg.output.empty()) save_png(rec.adversarial, cfg.output);
    print_kv("rg", rec.rg);
    print_kv("psnr", psnr(rec.adversarial, img));
    print_kv("ssim", ssim(rec.adversarial, img));
    print_kv("linf", rec.linf);
    print_kv("mae_star", rec.mae_star_pert);
    std::printf("bound_ok=%d\n", rec.bound_ok ? 1 : 0);
    print_kv("wall_time_s", rec.wall_time);
    return kExitOk;
}

int cmd_attack_video(const RunConfig& cfg, const Overrides& o) {
    RunConfig run = cfg;
    const int stride = o.stride.value_or(run.iterations);
    if (o.stride && run.iterations == 1) run.iterations = stride;  // protocol couples them
    VideoSequence video = load_frames(require_input(run), run.frame_pattern);
    auto oracle = make_oracle(run.metric_name, run.metric_seed);
    const AttackKind kind = attack_kind_from_name(run.attack_name);
    VideoAttackResult result =
        attack_video(video, *oracle, run.attack_config(/*video=*/true), stride, kind, o.threads);
    for (const FrameRecord& rec : result.frames)
        if (kind == AttackKind::ioi && rec.attacked && !rec.bound_ok)
            throw InvariantViolation("perturbation bound falsified on an attacked frame");
    if (!run.output.empty()) save_frames(result.adversarial, run.output, run.frame_pattern);
    print_kv("averaged_rg", result.averaged_rg);
    print_kv("attack_wall_time_s", result.attack_wall_time);
    std::printf("gradient_calls=%ld\n", result.gradient_calls);
    std::printf("frames=%zu attacked=%zu\n", result.frames.size(),
                (size_t)std::count_if(result.frames.begin(), result.frames.end(),
                                      [](const FrameRecord& r) { return r.attacked; }));
    return kExitOk;
}

int cmd_align(const RunConfig& cfg) {
    const std::string& input = require_input(cfg);
    auto oracle = make_oracle(cfg.metric_name, cfg.metric_seed);
    AlignResult res;
    if (std::filesystem::is_directory(input)) {
        VideoSequence video = load_frames(input, cfg.frame_pattern);
        res = align_gain(video, *oracle, cfg.attack_name, cfg.rg_target, cfg.d, cfg.n_stop,
                         cfg.f_for_video());
    } else {
        Image img = load_png(input);
        res = align_gain(img, *oracle, cfg.attack_name, cfg.rg_target, cfg.d, cfg.n_stop,
                         cfg.f_for_image());
    }
    print_kv("lr_found", res.lr_found);
    print_kv("rg_achieved", res.rg_achieved);
    std::printf("probes=%d\n", res.probes);
    std::printf("converged_by=%s\n",
                res.converged_by == ConvergedBy::target_reached ? "target_reached" : "stagnation");
    return kExitOk;
}

int cmd_framebudget(const RunConfig& cfg, const Overrides& o) {
    VideoSequence video = load_frames(require_input(cfg), cfg.frame_pattern);
    auto oracle = make_oracle(cfg.metric_name, cfg.metric_seed);
    std::vector<SweepRow> rows = frame_budget_sweep(video, *oracle, cfg.epsilon, o.strides);
    std::printf("stride,averaged_rg,wall_time_s,gradient_calls\n");
    for (const SweepRow& r : rows)
        std::printf("%d,%.9g,%.9g,%ld\n", r.stride, r.averaged_rg, r.wall_time, r.gradient_calls);
    return kExitOk;
}

int cmd_defend(const RunConfig& cfg, const Overrides& o) {
    if (o.adversarial_dir.empty())
        throw ConfigError("defend needs --adversarial pointing at the attacked frames");
    VideoSequence original = load_frames(require_input(cfg), cfg.frame_pattern);
    VideoSequence adversarial = load_frames(o.adversarial_dir, cfg.frame_pattern);
    auto oracle = make_oracle(cfg.metric_name, cfg.metric_seed);
    DefenceReport rep = evaluate_defences(original, adversarial, *oracle, o.fraction, cfg.seed);
    print_kv("rg_undefended", rep.rg_undefended);
    print_kv("rg_crop", rep.rg_crop);
    print_kv("rg_resize", rep.rg_resize);
    return kExitOk;
}

int cmd_weights_dump(const RunConfig& cfg, const Overrides& o) {
    Image img = load_png(require_input(cfg));
    WeightMap w;
    if (o.weight_kind == "ioi")
        w = ioi_weights(img);
    else if (o.weight_kind == "nvw")
        w = nvw_weights(img);
    else if (o.weight_kind == "sobel")
        w = sobel_weights(img);
    else
        throw ConfigError("unknown weight kind: " + o.weight_kind +
                          " (expected ioi, nvw or sobel)");
    if (cfg.output.empty()) throw ConfigError("weights-dump needs --output");
    save_png(w, cfg.output);
    double wmin = 1.0, wmax = 0.0;
    for (double v : w.data) {
        wmin = std::min(wmin, v);
        wmax = std::max(wmax, v);
    }
    print_kv("min", wmin);
    print_kv("max", wmax);
    return kExitOk;
}

// Randomized stress of the pre-clamp perturbation bound
// ||I^a - I||inf <= (1-f) * MAE*(I^p, I) + 1e-9 over both toy oracles,
// a grid of strengths and retained fractions, and random image shapes.
int cmd_verify_bound(const RunConfig& cfg, const Overrides& o) {
    if (o.sweep_images < 1) throw ConfigError("--images must be >= 1");
    const double epsilons[] = {0.05, 0.1, 0.2};
    const double fractions[] = {0.01, 0.05, 0.07, 0.3};
    long checked = 0, violations = 0;
    double worst_ratio = 0.0;  // linf / allowance; <= 1 means the bound holds
    for (int i = 0; i < o.sweep_images; ++i) {
        Rng shape_rng(derive_seed(cfg.seed, (uint64_t)i));
        const int h = 8 + (int)shape_rng.below(57);  // 8..64
        const int w = 8 + (int)shape_rng.below(57);
        const int c = i % 2 == 0 ? 3 : 1;
        Image img = random_image(derive_seed(cfg.seed, 1000 + (uint64_t)i), h, w, c);
        for (const char* metric : {"toy_laplace", "toy_cnn"}) {
            auto oracle = make_oracle(metric, cfg.metric_seed);
            for (double eps : epsilons)
                for (double f : fractions) {
                    AttackConfig acfg;
                    acfg.epsilon = eps;
                    acfg.f = f;
                    AttackRecord rec = ioi_attack(img, *oracle, acfg);
                    ++checked;
                    const double allowance = (1.0 - f) * rec.mae_star_pert + 1e-9;
                    if (allowance > 0.0)
                        worst_ratio = std::max(worst_ratio, rec.linf / allowance);
                    if (!rec.bound_ok) ++violations;
                }
        }
    }
    std::printf("checked=%ld violations=%ld worst_ratio=%.9g\n", checked, violations,
                worst_ratio);
    if (violations > 0)
        throw InvariantViolation("perturbation bound falsified in " +
                                 std::to_string(violations) + " of " + std::to_string(checked) +
                                 " runs");
    return kExitOk;
}

std::vector<std::string> list_pngs(const std::string& dir) {
    std::vector<std::string> paths;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png")
            paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw IoError("no .png files in " + dir);
    return paths;
}

int cmd_report(const RunConfig& cfg, const Overrides& o) {
    if (cfg.output.empty())
        throw ConfigError("report needs an output directory (--output or io.output)");
    auto oracle = make_oracle(cfg.metric_name, cfg.metric_seed);

    std::vector<std::pair<std::string, Image>> items;
    if (o.synthetic > 0) {
        for (int i = 0; i < o.synthetic; ++i)
            items.emplace_back("synthetic-" + std::to_string(i),
                               random_image(derive_seed(cfg.seed, (uint64_t)i), 32, 32, 3));
    } else {
        const std::string& input = require_input(cfg);
        if (std::filesystem::is_directory(input)) {
            for (const std::string& path : list_pngs(input))
                items.emplace_back(std::filesystem::path(path).filename().string(),
                                   load_png(path));
        } else {
            items.emplace_back(std::filesystem::path(input).filename().string(),
                               load_png(input));
        }
    }

    std::vector<std::string> attacks =
        o.report_attacks.empty() ? std::vector<std::string>{cfg.attack_name} : o.report_attacks;

    std::vector<ReportRow> rows;
    for (const auto& [name, img] : items)
        for (const std::string& attack : attacks) {
            RunConfig per = cfg;
            per.attack_name = attack;
            AttackRecord rec = run_single(per, img, *oracle);
            ReportRow row;
            row.item = name;
            row.attack = attack;
            row.rg = rec.rg;
            row.psnr_db = psnr(rec.adversarial, img);
            row.ssim_val = ssim(rec.adversarial, img);
            row.linf = rec.linf;
            row.mae_star_val = rec.mae_star_pert;
            row.bound_ok = rec.bound_ok;
            row.wall_time = rec.wall_time;
            rows.push_back(std::move(row));
        }
    for (const ReportRow& row : rows)
        if (row.attack == "ioi" && !row.bound_ok)
            throw InvariantViolation("perturbation bound falsified for item " + row.item);
    emit_report(rows, config_echo(cfg), cfg.output);
    std::printf("wrote %zu rows to %s/report.{csv,json}\n", rows.size(), cfg.output.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"invisible one-iteration adversarial attacks on no-reference quality metrics"};
    app.require_subcommand(1);
    Overrides o;

    CLI::App* attack = app.add_subcommand("attack", "attack one image, report quality deltas");
    add_common(attack, o);
    attack->add_flag("--step-clamp", o.step_clamp, "clamp to [0,1] after every ifgsm step");

    CLI::App* attack_video =
        app.add_subcommand("attack-video", "attack every stride-th frame of a sequence");
    add_common(attack_video, o);
    attack_video->add_option("--stride", o.stride, "attack every stride-th frame");
    attack_video->add_option("--threads", o.threads, "worker threads (0 = all cores)");

    CLI::App* align =
        app.add_subcommand("align", "search the attack strength reaching a relative-gain target");
    add_common(align, o);

    CLI::App* framebudget = app.add_subcommand(
        "framebudget", "equal-budget stride sweep over a frame sequence");
    add_common(framebudget, o);
    framebudget->add_option("--strides", o.strides, "strides to sweep")->delimiter(',');
    framebudget->add_option("--threads", o.threads, "worker threads (0 = all cores)");

    CLI::App* defend =
        app.add_subcommand("defend", "measure crop/resize purification of an attacked sequence");
    add_common(defend, o);
    defend->add_option("--adversarial", o.adversarial_dir, "directory of attacked frames");
    defend->add_option("--fraction", o.fraction, "defence size fraction (default 0.8)");

    CLI::App* weights =
        app.add_subcommand("weights-dump", "write a perceptual weight map as a PNG");
    add_common(weights, o);
    weights->add_option("--kind", o.weight_kind, "ioi, nvw or sobel");

    CLI::App* verify =
        app.add_subcommand("verify-bound", "stress the pre-clamp perturbation bound");
    add_common(verify, o);
    verify->add_option("--images", o.sweep_images, "random images to sweep (default 200)");

    CLI::App* report = app.add_subcommand("report", "batch-attack items and emit CSV/JSON");
    add_common(report, o);
    report->add_option("--synthetic", o.synthetic, "use N seeded synthetic images as items");
    report->add_option("--attacks", o.report_attacks, "attacks to run per item")->delimiter(',');
    report->add_flag("--step-clamp", o.step_clamp, "clamp to [0,1] after every ifgsm step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ioi::kExitConfig;
    }

    try {
        const RunConfig cfg = resolve(o);
        if (attack->parsed()) return cmd_attack(cfg);
        if (attack_video->parsed()) return cmd_attack_video(cfg, o);
        if (align->parsed()) return cmd_align(cfg);
        if (framebudget->parsed()) return cmd_framebudget(cfg, o);
        if (defend->parsed()) return cmd_defend(cfg, o);
        if (weights->parsed()) return cmd_weights_dump(cfg, o);
        if (verify->parsed()) return cmd_verify_bound(cfg, o);
        if (report->parsed()) return cmd_report(cfg, o);
        throw ioi::ConfigError("no subcommand selected");
    } catch (const ioi::InvariantViolation& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return ioi::kExitInvariant;
    } catch (const ioi::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return ioi::kExitIo;
    } catch (const ioi::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return ioi::kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 1;
    }
}
