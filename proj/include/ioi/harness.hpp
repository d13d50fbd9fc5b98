#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ioi/attacks.hpp"
#include "ioi/image.hpp"
#include "ioi/metrics.hpp"

namespace ioi {

enum class ConvergedBy { target_reached, stagnation };

struct AlignResult {
    double lr_found = 0.0;    // the lr actually used by the final probe
    double rg_achieved = 0.0;
    int probes = 0;
    ConvergedBy converged_by = ConvergedBy::target_reached;
};

// One strength probe: given lr, produce the achieved relative gain.
using RgProbe = std::function<double(double lr)>;

// Gain-aligning search, verbatim semantics of the published listing:
//   lr = 0, counter = 0, RG_prev = 0
//   loop: RG = probe(lr); flag if RG >= rg_target; if RG <= RG_prev counter++;
//         flag if counter == n_stop; lr += d; RG_prev = RG
// The listing increments lr after the flag checks, so lr_found reports the lr
// the final probe actually used. counter never resets. Requires d > 0,
// n_stop >= 1.
AlignResult align_gain_curve(const RgProbe& probe, double rg_target, double d, int n_stop);

// align over a real attack: probe(lr) runs `attack` with epsilon = lr on img.
AlignResult align_gain(const Image& img, const GradientOracle& oracle, const std::string& attack,
                       double rg_target, double d, int n_stop, double f = 0.07);
AlignResult align_gain(const VideoSequence& video, const GradientOracle& oracle,
                       const std::string& attack, double rg_target, double d, int n_stop,
                       double f = 0.05);

struct SweepRow {
    int stride = 0;
    double averaged_rg = 0.0;
    double wall_time = 0.0;    // attack synthesis time (quality scoring excluded)
    long gradient_calls = 0;
};

// Figure-4 protocol: for each stride s, I-FGSM-attack every s-th frame with
// s iterations of eps/s (equal total gradient budget per row).
std::vector<SweepRow> frame_budget_sweep(const VideoSequence& video, const GradientOracle& oracle,
                                         double epsilon, const std::vector<int>& strides);

// One seeded crop offset per video (same crop on every frame); output dims
// round(fraction*H) x round(fraction*W). fraction = 1 is the identity.
VideoSequence defend_random_crop(const VideoSequence& video, double fraction, uint64_t seed);

// Bilinear per-frame resize to round(fraction*H) x round(fraction*W).
VideoSequence defend_resize(const VideoSequence& video, double fraction);

// Bilinear resize of one frame (pixel-center alignment; preserves constants).
Image resize_bilinear(const Image& img, int out_h, int out_w);

struct DefenceReport {
    double rg_undefended = 0.0;
    double rg_crop = 0.0;
    double rg_resize = 0.0;
};

// Appendix-style purification protocol: scores defended originals AND defended
// adversarials, then takes the mean per-frame relative gain between those.
DefenceReport evaluate_defences(const VideoSequence& original, const VideoSequence& adversarial,
                                const GradientOracle& oracle, double fraction, uint64_t seed);

// Mean per-frame relative gain between two aligned sequences.
double video_relative_gain(const VideoSequence& original, const VideoSequence& adversarial,
                           const GradientOracle& oracle);

struct ReportRow {
    std::string item;
    std::string attack;
    double rg = 0.0;
    double psnr_db = 0.0;
    double ssim_val = 0.0;
    double linf = 0.0;
    double mae_star_val = 0.0;
    bool bound_ok = true;
    double wall_time = 0.0;
};

struct Aggregate {
    double mean = 0.0;
    double ci95 = 0.0;  // 1.96 * sample stddev / sqrt(n); 0 when n < 2
    int count = 0;
};

// mean and normal-approximation 95% half-width of v (sample stddev, n-1).
Aggregate aggregate(const std::vector<double>& v);

// CSV with the fixed header item,attack,rg,psnr,ssim,linf,mae_star,bound_ok,
// wall_time_s; floats with 9 significant digits; bools as 1/0.
std::string report_csv(const std::vector<ReportRow>& rows);

// JSON mirror of the rows plus per-attack aggregates and a config echo.
std::string report_json(const std::vector<ReportRow>& rows, const std::string& config_echo);

// Writes <out_dir>/report.csv and <out_dir>/report.json. Requires >= 1 row.
void emit_report(const std::vector<ReportRow>& rows, const std::string& config_echo,
                 const std::string& out_dir);

}  // namespace ioi
