#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "ktnz/data.hpp"
#include "ktnz/model.hpp"
#include "ktnz/train.hpp"
#include "ktnz/trunc.hpp"

namespace ktnz {

/// Inclusive range "start:end:step" (or "start:end", step 1). The end value
/// is included only when the step lands on it exactly.
std::vector<std::size_t> parse_range(const std::string& text);

/// One sweep target: a conv layer plus either a bipartition cut name
/// ("OUT", "OUT,KW", ...) or "CP" for CP-rank truncation.
struct SweepTarget {
    std::string layer;
    std::string cut;
    std::vector<std::size_t> keeps;
};

struct SweepConfig {
    std::vector<SweepTarget> targets;
    bool simultaneous = false;
    std::uint64_t seed = 0;
};

/// Minimal TOML subset: `key = value` lines with bool/integer/string/array
/// values, '#' comments. Targets are "layer cut range" strings, e.g.
/// targets = ["conv1 OUT 2:14:2", "conv2 CP 1:8"].
SweepConfig load_sweep_config(const std::string& path);
SweepConfig parse_sweep_config(const std::string& text);

struct SweepRow {
    std::string target; // layer name, "+"-joined when simultaneous
    TruncationReport report;
    EvalResult eval;
};

/// Truncate-and-evaluate over every keep value (or zipped keep tuple when
/// simultaneous), on fresh copies of the model. The first row is the
/// untruncated baseline.
std::vector<SweepRow> run_sweep(const ModelSpec& m, const SweepConfig& cfg,
                                const Dataset& data);

/// CSV schema: target,cut,keep,norm_before,norm_after,norm_loss_pct,
/// entropy_before,entropy_after,corr_loss_pct,compression_ratio,top1,top5.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

struct ReboundPoint {
    std::size_t epoch = 0; // 0 = immediately after truncation
    EvalResult eval;
    double best_top1_so_far = 0.0;
};

/// Apply each target's most aggressive truncation (smallest keep), then
/// retrain epoch by epoch, recording accuracy after each epoch.
std::vector<ReboundPoint> retrain_after_truncation(const ModelSpec& m,
                                                   const SweepConfig& cfg,
                                                   const Dataset& data,
                                                   std::size_t epochs,
                                                   const TrainOptions& opts);

void write_rebound_csv(std::ostream& out, const std::vector<ReboundPoint>& points);

/// Shortest round-trip decimal formatting (deterministic output files).
std::string format_double(double v);

} // namespace ktnz
