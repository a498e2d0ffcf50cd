#include "ktnz/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ktnz/errors.hpp"

namespace ktnz {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::vector<std::size_t> parse_range(const std::string& text) {
    std::vector<std::size_t> parts;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(':', start);
        if (end == std::string::npos) end = text.size();
        const std::string token = text.substr(start, end - start);
        if (token.empty() ||
            token.find_first_not_of("0123456789") != std::string::npos) {
            fail(ErrorCode::BadConfig, "bad range component '" + token +
                                           "' in '" + text + "'");
        }
        parts.push_back(static_cast<std::size_t>(std::stoull(token)));
        if (end == text.size()) break;
        start = end + 1;
    }
    if (parts.size() < 2 || parts.size() > 3) {
        fail(ErrorCode::BadConfig,
             "range must be start:end or start:end:step, got '" + text + "'");
    }
    const std::size_t lo = parts[0], hi = parts[1];
    const std::size_t step = parts.size() == 3 ? parts[2] : 1;
    if (step < 1) fail(ErrorCode::BadConfig, "range step must be >= 1");
    if (lo < 1) fail(ErrorCode::BadConfig, "range start must be >= 1");
    if (lo > hi) fail(ErrorCode::BadConfig, "range start exceeds end in '" + text + "'");

    std::vector<std::size_t> out;
    for (std::size_t v = lo; v <= hi; v += step) out.push_back(v);
    return out;
}

namespace {

std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_str = !in_str;
        else if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> parse_string_array(const std::string& value) {
    if (value.front() != '[' || value.back() != ']') {
        fail(ErrorCode::BadConfig, "expected an array value");
    }
    std::vector<std::string> out;
    std::string body = value.substr(1, value.size() - 2);
    std::size_t i = 0;
    while (i < body.size()) {
        while (i < body.size() &&
               (body[i] == ' ' || body[i] == ',' || body[i] == '\t' ||
                body[i] == '\n' || body[i] == '\r')) {
            ++i;
        }
        if (i >= body.size()) break;
        if (body[i] != '"') {
            fail(ErrorCode::BadConfig, "array elements must be quoted strings");
        }
        const std::size_t close = body.find('"', i + 1);
        if (close == std::string::npos) {
            fail(ErrorCode::BadConfig, "unterminated string in array");
        }
        out.push_back(body.substr(i + 1, close - i - 1));
        i = close + 1;
    }
    return out;
}

SweepTarget parse_target(const std::string& text) {
    std::istringstream in(text);
    std::string layer, cut, range;
    if (!(in >> layer >> cut >> range)) {
        fail(ErrorCode::BadConfig,
             "target must be \"layer cut range\", got '" + text + "'");
    }
    std::string extra;
    if (in >> extra) {
        fail(ErrorCode::BadConfig, "trailing token '" + extra + "' in target");
    }
    if (cut != "CP") {
        (void)Bipartition::parse(cut); // validates
    }
    return SweepTarget{layer, cut, parse_range(range)};
}

} // namespace

SweepConfig parse_sweep_config(const std::string& text) {
    SweepConfig cfg;
    bool saw_targets = false;

    std::istringstream in(text);
    std::string line, statement;
    int depth = 0;
    auto flush = [&](const std::string& stmt) {
        const std::string s = trim(stmt);
        if (s.empty()) return;
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos) {
            fail(ErrorCode::BadConfig, "expected key = value, got '" + s + "'");
        }
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key == "simultaneous") {
            if (value == "true") cfg.simultaneous = true;
            else if (value == "false") cfg.simultaneous = false;
            else fail(ErrorCode::BadConfig, "simultaneous must be true/false");
        } else if (key == "seed") {
            if (value.empty() ||
                value.find_first_not_of("0123456789") != std::string::npos) {
                fail(ErrorCode::BadConfig, "seed must be a nonnegative integer");
            }
            cfg.seed = std::stoull(value);
        } else if (key == "targets") {
            for (const std::string& t : parse_string_array(value)) {
                cfg.targets.push_back(parse_target(t));
            }
            saw_targets = true;
        } else {
            fail(ErrorCode::BadConfig, "unknown config key '" + key + "'");
        }
    };

    while (std::getline(in, line)) {
        const std::string clean = strip_comment(line);
        for (char c : clean) {
            if (c == '[') ++depth;
            else if (c == ']') --depth;
        }
        statement += clean;
        statement += ' ';
        if (depth == 0) {
            flush(statement);
            statement.clear();
        }
    }
    if (depth != 0) fail(ErrorCode::BadConfig, "unbalanced brackets in config");
    flush(statement);

    if (!saw_targets || cfg.targets.empty()) {
        fail(ErrorCode::BadConfig, "config must list at least one target");
    }
    return cfg;
}

SweepConfig load_sweep_config(const std::string& path) {
    std::ifstream file(path);
    if (!file) fail(ErrorCode::BadConfig, "cannot open config " + path);
    std::ostringstream buf;
    buf << file.rdbuf();
    return parse_sweep_config(buf.str());
}

namespace {

struct ResolvedTarget {
    const SweepTarget* spec = nullptr;
    std::string param; // kernel parameter name
};

std::vector<ResolvedTarget> resolve_targets(const ModelSpec& m,
                                            const SweepConfig& cfg) {
    std::vector<ResolvedTarget> out;
    for (const SweepTarget& t : cfg.targets) {
        const Layer* layer = m.find_layer(t.layer);
        if (!layer || layer->kind != LayerKind::Conv) {
            fail(ErrorCode::BadConfig,
                 "sweep target '" + t.layer + "' is not a conv layer of the model");
        }
        if (t.keeps.empty()) {
            fail(ErrorCode::BadConfig, "empty keep range for '" + t.layer + "'");
        }
        out.push_back(ResolvedTarget{&t, layer->weight});
    }
    return out;
}

// Apply one truncation; reports and the (possibly unchanged) kernel.
std::pair<Kernel, TruncationReport> apply_truncation(const Kernel& k,
                                                     const SweepTarget& t,
                                                     std::size_t keep,
                                                     std::uint64_t seed) {
    if (t.cut == "CP") {
        CpAlsOptions opts;
        opts.seed = seed;
        return truncate_cp(k, keep, opts);
    }
    return truncate_bipartition(k, Bipartition::parse(t.cut), keep);
}

TruncationReport aggregate_reports(const std::vector<TruncationReport>& reps) {
    TruncationReport agg;
    agg.cut = reps.front().cut;
    for (const auto& r : reps) {
        if (r.cut != agg.cut) agg.cut = "mixed";
    }
    agg.kept = reps.front().kept;
    double nb_sq = 0.0, na_sq = 0.0;
    for (const auto& r : reps) {
        nb_sq += r.norm_before * r.norm_before;
        na_sq += r.norm_after * r.norm_after;
        agg.norm_loss_pct += r.norm_loss_pct;
        agg.entropy_before += r.entropy_before;
        agg.entropy_after += r.entropy_after;
        agg.corr_loss_pct += r.corr_loss_pct;
        agg.zero_kernel = agg.zero_kernel || r.zero_kernel;
    }
    const double n = static_cast<double>(reps.size());
    agg.norm_before = std::sqrt(nb_sq);
    agg.norm_after = std::sqrt(na_sq);
    agg.norm_loss_pct /= n; // the experiments plot average norm loss
    agg.entropy_before /= n;
    agg.entropy_after /= n;
    agg.corr_loss_pct /= n;
    // aggregate CR: total dense params over total factored params
    double dense_total = 0.0, factored_total = 0.0;
    for (const auto& r : reps) {
        if (r.compression_ratio > 0.0) {
            dense_total += 1.0;
            factored_total += 1.0 / r.compression_ratio;
        }
    }
    agg.compression_ratio =
        factored_total > 0.0 ? dense_total / factored_total : 0.0;
    return agg;
}

} // namespace

std::vector<SweepRow> run_sweep(const ModelSpec& m, const SweepConfig& cfg,
                                const Dataset& data) {
    validate_model(m);
    const std::vector<ResolvedTarget> targets = resolve_targets(m, cfg);

    std::vector<SweepRow> rows;
    const EvalResult baseline = evaluate(m, data);
    {
        SweepRow base;
        base.target = "baseline";
        base.report.cut = "none";
        base.report.compression_ratio = 1.0;
        base.eval = baseline;
        rows.push_back(std::move(base));
    }

    if (!cfg.simultaneous) {
        for (const ResolvedTarget& rt : targets) {
            const Kernel k(m.parameters.at(rt.param));
            if (frobenius_norm(k.tensor()) < kZeroKernelNorm) {
                // flagged and skipped: one report row, model unchanged
                auto [unchanged, rep] =
                    apply_truncation(k, *rt.spec, rt.spec->keeps.front(), cfg.seed);
                SweepRow row;
                row.target = rt.spec->layer;
                row.report = rep;
                row.eval = baseline;
                rows.push_back(std::move(row));
                continue;
            }
            for (std::size_t keep : rt.spec->keeps) {
                auto [kernel, rep] = apply_truncation(k, *rt.spec, keep, cfg.seed);
                ModelSpec truncated = m;
                truncated.parameters.at(rt.param) = kernel.tensor();
                SweepRow row;
                row.target = rt.spec->layer;
                row.report = rep;
                row.eval = evaluate(truncated, data);
                rows.push_back(std::move(row));
            }
        }
        return rows;
    }

    const std::size_t len = targets.front().spec->keeps.size();
    for (const ResolvedTarget& rt : targets) {
        if (rt.spec->keeps.size() != len) {
            fail(ErrorCode::BadConfig,
                 "simultaneous sweeps zip ranges positionally; all ranges must "
                 "have equal length");
        }
    }
    std::string joined;
    for (const ResolvedTarget& rt : targets) {
        if (!joined.empty()) joined += '+';
        joined += rt.spec->layer;
    }
    for (std::size_t pos = 0; pos < len; ++pos) {
        ModelSpec truncated = m;
        std::vector<TruncationReport> reps;
        for (const ResolvedTarget& rt : targets) {
            const Kernel k(m.parameters.at(rt.param));
            auto [kernel, rep] =
                apply_truncation(k, *rt.spec, rt.spec->keeps[pos], cfg.seed);
            truncated.parameters.at(rt.param) = kernel.tensor();
            reps.push_back(rep);
        }
        SweepRow row;
        row.target = joined;
        row.report = aggregate_reports(reps);
        row.eval = evaluate(truncated, data);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "target,cut,keep,norm_before,norm_after,norm_loss_pct,"
           "entropy_before,entropy_after,corr_loss_pct,compression_ratio,"
           "top1,top5\n";
    for (const SweepRow& r : rows) {
        out << r.target << ',' << r.report.cut << ',' << r.report.kept << ','
            << format_double(r.report.norm_before) << ','
            << format_double(r.report.norm_after) << ','
            << format_double(r.report.norm_loss_pct) << ','
            << format_double(r.report.entropy_before) << ','
            << format_double(r.report.entropy_after) << ','
            << format_double(r.report.corr_loss_pct) << ','
            << format_double(r.report.compression_ratio) << ','
            << format_double(r.eval.top1) << ',' << format_double(r.eval.top5)
            << '\n';
    }
}

std::vector<ReboundPoint> retrain_after_truncation(const ModelSpec& m,
                                                   const SweepConfig& cfg,
                                                   const Dataset& data,
                                                   std::size_t epochs,
                                                   const TrainOptions& opts) {
    validate_model(m);
    const std::vector<ResolvedTarget> targets = resolve_targets(m, cfg);

    ModelSpec truncated = m;
    for (const ResolvedTarget& rt : targets) {
        const std::size_t keep =
            *std::min_element(rt.spec->keeps.begin(), rt.spec->keeps.end());
        const Kernel k(m.parameters.at(rt.param));
        auto [kernel, rep] = apply_truncation(k, *rt.spec, keep, cfg.seed);
        truncated.parameters.at(rt.param) = kernel.tensor();
    }

    std::vector<ReboundPoint> points;
    double best = 0.0;
    {
        ReboundPoint p;
        p.epoch = 0;
        p.eval = evaluate(truncated, data);
        best = p.eval.top1;
        p.best_top1_so_far = best;
        points.push_back(p);
    }
    for (std::size_t e = 1; e <= epochs; ++e) {
        TrainOptions per_epoch = opts;
        per_epoch.epochs = 1;
        per_epoch.seed = opts.seed + e;
        truncated = train_toy(truncated, data, per_epoch).model;
        ReboundPoint p;
        p.epoch = e;
        p.eval = evaluate(truncated, data);
        best = std::max(best, p.eval.top1);
        p.best_top1_so_far = best;
        points.push_back(p);
    }
    return points;
}

void write_rebound_csv(std::ostream& out, const std::vector<ReboundPoint>& points) {
    out << "epoch,top1,top5,best_top1_so_far\n";
    for (const ReboundPoint& p : points) {
        out << p.epoch << ',' << format_double(p.eval.top1) << ','
            << format_double(p.eval.top5) << ','
            << format_double(p.best_top1_so_far) << '\n';
    }
}

} // namespace ktnz
