#include "ioi/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ioi/rng.hpp"
#include "json.hpp"

namespace ioi {

AlignResult align_gain_curve(const RgProbe& probe, double rg_target, double d, int n_stop) {
    if (!(d > 0.0)) throw ConfigError("align: step d must be > 0");
    if (n_stop < 1) throw ConfigError("align: n_stop must be >= 1");

    AlignResult result;
    double lr = 0.0, rg_prev = 0.0;
    int counter = 0;
    for (;;) {
        const double rg = probe(lr);
        ++result.probes;
        if (rg >= rg_target) {
            result.converged_by = ConvergedBy::target_reached;
            result.lr_found = lr;
            result.rg_achieved = rg;
            return result;
        }
        if (rg <= rg_prev) ++counter;  // never resets
        if (counter == n_stop) {
            result.converged_by = ConvergedBy::stagnation;
            result.lr_found = lr;
            result.rg_achieved = rg;
            return result;
        }
        lr += d;
        rg_prev = rg;
    }
}

AlignResult align_gain(const Image& img, const GradientOracle& oracle, const std::string& attack,
                       double rg_target, double d, int n_stop, double f) {
    const AttackKind kind = attack_kind_from_name(attack);
    RgProbe probe = [&](double lr) {
        AttackConfig cfg;
        cfg.epsilon = lr;
        cfg.f = f;
        return run_attack(kind, img, oracle, cfg).rg;
    };
    return align_gain_curve(probe, rg_target, d, n_stop);
}

AlignResult align_gain(const VideoSequence& video, const GradientOracle& oracle,
                       const std::string& attack, double rg_target, double d, int n_stop,
                       double f) {
    const AttackKind kind = attack_kind_from_name(attack);
    RgProbe probe = [&](double lr) {
        AttackConfig cfg;
        cfg.epsilon = lr;
        cfg.f = f;
        return attack_video(video, oracle, cfg, /*frame_stride=*/1, kind).averaged_rg;
    };
    return align_gain_curve(probe, rg_target, d, n_stop);
}

std::vector<SweepRow> frame_budget_sweep(const VideoSequence& video, const GradientOracle& oracle,
                                         double epsilon, const std::vector<int>& strides) {
    if (strides.empty()) throw ConfigError("framebudget: at least one stride required");
    // Admission is a one-off setup cost; run it before the first row so it
    // cannot distort that row's wall-time measurement.
    require_admitted(oracle);
    const size_t n = video.frames.size();
    std::vector<SweepRow> rows;
    rows.reserve(strides.size());
    for (int s : strides) {
        if (s < 1) throw ConfigError("framebudget: strides must be >= 1");
        if (n % (size_t)s != 0)
            throw ConfigError("framebudget: stride " + std::to_string(s) +
                              " does not divide the frame count " + std::to_string(n));
        AttackConfig cfg;
        cfg.epsilon = epsilon;
        cfg.iterations = s;
        VideoAttackResult r = attack_video(video, oracle, cfg, s, AttackKind::ifgsm);
        rows.push_back({s, r.averaged_rg, r.attack_wall_time, r.gradient_calls});
    }
    return rows;
}

namespace {

void crop_dims(int h, int w, double fraction, int& out_h, int& out_w) {
    out_h = (int)std::llround(fraction * h);
    out_w = (int)std::llround(fraction * w);
    if (out_h < 1 || out_w < 1) throw ConfigError("defence: output smaller than one pixel");
}

Image crop(const Image& img, int oy, int ox, int out_h, int out_w) {
    Image out(out_h, out_w, img.channels);
    for (int c = 0; c < img.channels; ++c) {
        const double* src_plane = img.plane(c);
        double* dst = out.plane(c);
        for (int y = 0; y < out_h; ++y) {
            const double* src = src_plane + (size_t)(oy + y) * img.width + ox;
            std::copy(src, src + out_w, dst + (size_t)y * out_w);
        }
    }
    return out;
}

}  // namespace

VideoSequence defend_random_crop(const VideoSequence& video, double fraction, uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ConfigError("defend_random_crop: fraction must lie in (0,1]");
    if (video.frames.empty()) throw ConfigError("defend_random_crop: empty sequence");
    const Image& first = video.frames.front();
    int out_h, out_w;
    crop_dims(first.height, first.width, fraction, out_h, out_w);

    // One offset for the whole sequence (row drawn first, then column).
    Rng rng(seed);
    const int oy = (int)rng.below((uint64_t)(first.height - out_h + 1));
    const int ox = (int)rng.below((uint64_t)(first.width - out_w + 1));

    VideoSequence out;
    out.frame_rate = video.frame_rate;
    out.frames.reserve(video.frames.size());
    for (const Image& frame : video.frames) {
        if (!frame.same_shape(first))
            throw DimensionError("defend_random_crop: frames differ in shape");
        out.frames.push_back(crop(frame, oy, ox, out_h, out_w));
    }
    return out;
}

Image resize_bilinear(const Image& img, int out_h, int out_w) {
    validate(img);
    if (out_h < 1 || out_w < 1) throw ConfigError("resize: output smaller than one pixel");
    Image out(out_h, out_w, img.channels);
    const double sy = (double)img.height / out_h;
    const double sx = (double)img.width / out_w;
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < out_h; ++y) {
            // Pixel-center alignment: dst center y+0.5 maps to src coordinate.
            double fy = (y + 0.5) * sy - 0.5;
            fy = std::clamp(fy, 0.0, (double)(img.height - 1));
            const int y0 = (int)fy;
            const int y1 = std::min(y0 + 1, img.height - 1);
            const double ty = fy - y0;
            for (int x = 0; x < out_w; ++x) {
                double fx = (x + 0.5) * sx - 0.5;
                fx = std::clamp(fx, 0.0, (double)(img.width - 1));
                const int x0 = (int)fx;
                const int x1 = std::min(x0 + 1, img.width - 1);
                const double tx = fx - x0;
                // lerp as a + t*(b-a) so constant inputs survive bitwise
                const double top =
                    img.at(c, y0, x0) + tx * (img.at(c, y0, x1) - img.at(c, y0, x0));
                const double bot =
                    img.at(c, y1, x0) + tx * (img.at(c, y1, x1) - img.at(c, y1, x0));
                out.at(c, y, x) = top + ty * (bot - top);
            }
        }
    return out;
}

VideoSequence defend_resize(const VideoSequence& video, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw ConfigError("defend_resize: fraction must lie in (0,1)");
    if (video.frames.empty()) throw ConfigError("defend_resize: empty sequence");
    VideoSequence out;
    out.frame_rate = video.frame_rate;
    out.frames.reserve(video.frames.size());
    for (const Image& frame : video.frames) {
        int out_h, out_w;
        crop_dims(frame.height, frame.width, fraction, out_h, out_w);
        out.frames.push_back(resize_bilinear(frame, out_h, out_w));
    }
    return out;
}

double video_relative_gain(const VideoSequence& original, const VideoSequence& adversarial,
                           const GradientOracle& oracle) {
    if (original.frames.size() != adversarial.frames.size())
        throw DimensionError("video_relative_gain: sequences differ in length");
    if (original.frames.empty()) throw ConfigError("video_relative_gain: empty sequence");
    double sum = 0.0;
    for (size_t i = 0; i < original.frames.size(); ++i)
        sum += relative_gain(oracle.score(adversarial.frames[i]),
                             oracle.score(original.frames[i]));
    return sum / (double)original.frames.size();
}

DefenceReport evaluate_defences(const VideoSequence& original, const VideoSequence& adversarial,
                                const GradientOracle& oracle, double fraction, uint64_t seed) {
    DefenceReport report;
    report.rg_undefended = video_relative_gain(original, adversarial, oracle);
    // The protocol scores defended originals against defended adversarials; the
    // same crop offset is applied to both sequences so the comparison stays
    // pixel-aligned.
    report.rg_crop = video_relative_gain(defend_random_crop(original, fraction, seed),
                                         defend_random_crop(adversarial, fraction, seed), oracle);
    report.rg_resize = video_relative_gain(defend_resize(original, fraction),
                                           defend_resize(adversarial, fraction), oracle);
    return report;
}

Aggregate aggregate(const std::vector<double>& v) {
    Aggregate a;
    a.count = (int)v.size();
    if (v.empty()) return a;
    double sum = 0.0;
    for (double x : v) sum += x;
    a.mean = sum / a.count;
    if (a.count < 2) return a;
    double ss = 0.0;
    for (double x : v) ss += (x - a.mean) * (x - a.mean);
    const double stddev = std::sqrt(ss / (a.count - 1));  // sample stddev
    a.ci95 = 1.96 * stddev / std::sqrt((double)a.count);
    return a;
}

namespace {

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

// Round to the 9-significant-digit decimal that the CSV prints, so the two
// report files agree on every value.
double round9(double v) {
    if (!std::isfinite(v)) return v;
    return std::strtod(fmt9(v).c_str(), nullptr);
}

nlohmann::json json_num(double v) {
    if (!std::isfinite(v)) return nullptr;  // JSON has no inf/nan
    return round9(v);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

}  // namespace

std::string report_csv(const std::vector<ReportRow>& rows) {
    std::string out = "item,attack,rg,psnr,ssim,linf,mae_star,bound_ok,wall_time_s\n";
    for (const ReportRow& r : rows) {
        out += csv_field(r.item) + ',' + csv_field(r.attack) + ',';
        out += fmt9(r.rg) + ',' + fmt9(r.psnr_db) + ',' + fmt9(r.ssim_val) + ',';
        out += fmt9(r.linf) + ',' + fmt9(r.mae_star_val) + ',';
        out += r.bound_ok ? "1," : "0,";
        out += fmt9(r.wall_time) + '\n';
    }
    return out;
}

std::string report_json(const std::vector<ReportRow>& rows, const std::string& config_echo) {
    nlohmann::json doc;
    doc["config"] =
        config_echo.empty() ? nlohmann::json::object() : nlohmann::json::parse(config_echo);

    nlohmann::json jrows = nlohmann::json::array();
    for (const ReportRow& r : rows)
        jrows.push_back({{"item", r.item},
                         {"attack", r.attack},
                         {"rg", json_num(r.rg)},
                         {"psnr", json_num(r.psnr_db)},
                         {"ssim", json_num(r.ssim_val)},
                         {"linf", json_num(r.linf)},
                         {"mae_star", json_num(r.mae_star_val)},
                         {"bound_ok", r.bound_ok},
                         {"wall_time_s", json_num(r.wall_time)}});
    doc["rows"] = std::move(jrows);

    // Per-attack aggregates, one object entry per distinct attack (the JSON
    // object serializer emits keys alphabetically).
    std::vector<std::string> attack_order;
    for (const ReportRow& r : rows)
        if (std::find(attack_order.begin(), attack_order.end(), r.attack) == attack_order.end())
            attack_order.push_back(r.attack);

    nlohmann::json aggs = nlohmann::json::object();
    for (const std::string& name : attack_order) {
        std::vector<double> rg, psnr, ssim_v, linf, mae, wall;
        for (const ReportRow& r : rows)
            if (r.attack == name) {
                rg.push_back(r.rg);
                psnr.push_back(r.psnr_db);
                ssim_v.push_back(r.ssim_val);
                linf.push_back(r.linf);
                mae.push_back(r.mae_star_val);
                wall.push_back(r.wall_time);
            }
        auto pack = [](const std::vector<double>& v) {
            Aggregate a = aggregate(v);
            return nlohmann::json{{"mean", json_num(a.mean)}, {"ci95", json_num(a.ci95)}};
        };
        aggs[name] = {{"count", (int)rg.size()},  {"rg", pack(rg)},
                      {"psnr", pack(psnr)},       {"ssim", pack(ssim_v)},
                      {"linf", pack(linf)},       {"mae_star", pack(mae)},
                      {"wall_time_s", pack(wall)}};
    }
    doc["aggregates"] = std::move(aggs);
    return doc.dump(2) + "\n";
}

void emit_report(const std::vector<ReportRow>& rows, const std::string& config_echo,
                 const std::string& out_dir) {
    if (rows.empty()) throw ConfigError("emit_report: no rows to report");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create directory " + out_dir + ": " + ec.message());

    auto write_file = [&](const std::string& name, const std::string& body) {
        const std::string path = out_dir + "/" + name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open " + path + " for writing");
        out << body;
        if (!out) throw IoError("short write to " + path);
    };
    write_file("report.csv", report_csv(rows));
    write_file("report.json", report_json(rows, config_echo));
}

}  // namespace ioi
