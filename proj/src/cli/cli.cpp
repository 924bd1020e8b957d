// Copyright 2026 The fuselab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fuselab/cli.hpp"

#include "fuselab/baselines.hpp"
#include "fuselab/bgs.hpp"
#include "fuselab/dataset.hpp"
#include "fuselab/error.hpp"
#include "fuselab/fusion/checkpoint.hpp"
#include "fuselab/fusion/train.hpp"
#include "fuselab/metrics.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

namespace fuselab::cli {

namespace {

namespace fs = std::filesystem;

struct Globals {
    std::uint64_t seed = 42;
    unsigned threads = 1;
};

struct SynthOpts {
    std::string out;
    std::string category = "synthetic";
    unsigned videos = 1;
    int width = 64;
    int height = 64;
    int frames = 200;
    int objects = 2;
    int min_size = 8;
    int max_size = 16;
    double max_speed = 2.0;
    double noise = 4.0;
};

struct BgsOpts {
    std::string input;
    std::string algo;
    std::string out;
};

struct VoteOpts {
    std::vector<std::string> masks;
    std::string expr;
    bool median = false;
    std::string out;
};

struct TrainOpts {
    std::vector<std::string> masks;
    std::string gt;
    std::string out;
    std::string arch = "tiny";
    std::size_t size = 64;
    std::uint32_t epochs = 50;
    std::uint32_t batch = 4;
    double lr = 1e-4;
    double min_fg = 0.005;
    std::size_t first = 0;
    std::size_t last = 0;
    std::string init;
    std::string loss_log;
};

struct ApplyOpts {
    std::string checkpoint;
    std::vector<std::string> masks;
    std::string out;
};

struct EvalOpts {
    std::string dataset;
    std::string results;
    std::string subdir;
    std::string prefix = "bin";
    std::vector<std::string> videos;
    std::string out;
    std::string format = "csv";
};

struct ReportOpts {
    std::string scores;
    std::string format = "csv";
    std::string out;
};

const std::vector<std::string> kMaskExtensions{".png", ".pgm"};

/// Runs fn(0..n-1) on up to `threads` workers; the first failing index (in
/// index order) has its exception rethrown.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
    if(workers <= 1) {
        for(std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for(std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for(std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch(...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for(auto& t : pool)
        t.join();
    for(auto& e : errors)
        if(e)
            std::rethrow_exception(e);
}

/// Frame numbers present in every directory, with per-directory paths.
struct AlignedMasks {
    std::vector<std::size_t> numbers;
    std::vector<std::vector<fs::path>> paths;  // [dir][frame]
};

AlignedMasks align_dirs(const std::vector<std::string>& dirs, const std::string& prefix) {
    AlignedMasks out;
    std::vector<std::map<std::size_t, fs::path>> found;
    for(const auto& d : dirs) {
        std::map<std::size_t, fs::path> m;
        for(auto& f : dataset::list_numbered(d, prefix, kMaskExtensions))
            m.emplace(f.number, f.path);
        if(m.empty())
            throw DataError("no " + prefix + "NNNNNN masks in " + d);
        found.push_back(std::move(m));
    }
    for(std::size_t i = 1; i < found.size(); ++i)
        if(found[i].size() != found[0].size() ||
           !std::equal(found[i].begin(), found[i].end(), found[0].begin(),
                       [](const auto& a, const auto& b) { return a.first == b.first; }))
            throw DataError("mask directories " + dirs[0] + " and " + dirs[i] + " hold different frame numbers");
    out.paths.resize(dirs.size());
    for(const auto& [num, path] : found[0]) {
        out.numbers.push_back(num);
        for(std::size_t d = 0; d < dirs.size(); ++d)
            out.paths[d].push_back(found[d].at(num));
    }
    return out;
}

std::vector<Mask> load_stack(const AlignedMasks& a, std::size_t frame) {
    std::vector<Mask> masks;
    for(const auto& dir : a.paths)
        masks.push_back(dataset::load_image(dir[frame]));
    return masks;
}

void write_text(const fs::path& path, const std::string& text) {
    if(path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    f << text;
    if(!f)
        throw DataError("cannot write " + path.string());
}

int cmd_synth(const Globals& g, const SynthOpts& o, std::ostream& out) {
    dataset::SyntheticConfig base;
    base.width = o.width;
    base.height = o.height;
    base.frames = o.frames;
    base.object_count = o.objects;
    base.min_size = o.min_size;
    base.max_size = o.max_size;
    base.max_speed = o.max_speed;
    base.noise_sigma = o.noise;
    base.validate();
    std::vector<std::string> names;
    for(unsigned v = 0; v < o.videos; ++v)
        names.push_back("video" + std::to_string(v + 1));
    parallel_for(names.size(), g.threads, [&](std::size_t v) {
        auto cfg = base;
        cfg.seed = g.seed + v;
        dataset::write_synthetic(dataset::synth_generate(cfg), cfg, o.out, o.category, names[v]);
    });
    out << "wrote " << names.size() << " synthetic video(s) of " << o.frames << " frames to "
        << (fs::path(o.out) / o.category).string() << "\n";
    return kExitOk;
}

int cmd_bgs(const Globals& g, const BgsOpts& o, std::ostream& out) {
    bgs::BgsParams params;
    params.sc.seed = g.seed;
    (void)bgs::make_model(o.algo, params);
    const auto files = dataset::list_numbered(o.input, "in", dataset::kInputExtensions);
    if(files.empty())
        throw DataError("no inNNNNNN frames in " + o.input);
    std::vector<Frame> frames;
    for(const auto& f : files)
        frames.push_back(dataset::load_image(f.path));
    const auto masks = bgs::run_bgs(frames, o.algo, params);
    fs::create_directories(o.out);
    for(std::size_t i = 0; i < masks.size(); ++i)
        dataset::save_mask(masks[i], fs::path(o.out) / dataset::numbered_name("bin", files[i].number, ".png"));
    out << o.algo << ": wrote " << masks.size() << " masks to " << o.out << "\n";
    return kExitOk;
}

int cmd_vote(const Globals& g, const VoteOpts& o, std::ostream& out) {
    std::optional<baselines::FusionExpr> expr;
    if(!o.expr.empty()) {
        expr = baselines::FusionExpr::parse(o.expr);
        for(const auto& n : expr->names())
            if(n.size() != 1 || n[0] < 'A' || static_cast<std::size_t>(n[0] - 'A') >= o.masks.size())
                throw ConfigError("expression name '" + n + "' does not refer to one of the " +
                                  std::to_string(o.masks.size()) + " mask directories (A, B, ...)");
    }
    const auto aligned = align_dirs(o.masks, "bin");
    fs::create_directories(o.out);
    parallel_for(aligned.numbers.size(), g.threads, [&](std::size_t i) {
        const auto stack = load_stack(aligned, i);
        Mask fused = expr ? expr->evaluate(baselines::MaskSet::lettered(stack)) : baselines::majority_vote(stack);
        if(o.median)
            fused = baselines::median_filter3(fused);
        dataset::save_mask(fused, fs::path(o.out) / dataset::numbered_name("bin", aligned.numbers[i], ".png"));
    });
    out << (expr ? "expression " + expr->to_string() : std::string("majority vote")) << ": wrote "
        << aligned.numbers.size() << " masks to " << o.out << "\n";
    return kExitOk;
}

int cmd_fuse_train(const Globals& g, const TrainOpts& o, std::ostream& out) {
    const auto inputs = static_cast<std::uint32_t>(o.masks.size());
    fusion::NetConfig cfg = o.arch == "paper" ? fusion::NetConfig::paper_scale() : fusion::NetConfig::tiny(inputs, o.size);
    cfg.input_channels = inputs;
    cfg.input_size = o.size;
    cfg.validate();
    fusion::TrainConfig tc;
    tc.epochs = o.epochs;
    tc.batch = o.batch;
    tc.adam.lr = o.lr;
    tc.seed = g.seed;
    tc.validate();
    if(o.min_fg < 0.0 || o.min_fg > 1.0)
        throw ConfigError("--min-fg must lie in [0, 1]");
    std::optional<fusion::Checkpoint> init;
    if(!o.init.empty())
        init = fusion::load_checkpoint(o.init);

    AlignedMasks aligned;
    {
        // gt files use the "gt" prefix, candidates "bin"
        const auto cand = align_dirs(o.masks, "bin");
        std::map<std::size_t, fs::path> gts;
        for(auto& f : dataset::list_numbered(o.gt, "gt", kMaskExtensions))
            gts.emplace(f.number, f.path);
        aligned.paths.resize(o.masks.size() + 1);
        for(std::size_t i = 0; i < cand.numbers.size(); ++i) {
            const std::size_t num = cand.numbers[i];
            if(num < o.first || (o.last > 0 && num > o.last))
                continue;
            const auto it = gts.find(num);
            if(it == gts.end())
                throw DataError("no ground truth for frame " + std::to_string(num) + " in " + o.gt);
            aligned.numbers.push_back(num);
            for(std::size_t d = 0; d < o.masks.size(); ++d)
                aligned.paths[d].push_back(cand.paths[d][i]);
            aligned.paths.back().push_back(it->second);
        }
    }
    if(aligned.numbers.empty())
        throw DataError("no frames in the requested range");
    std::vector<Mask> gts;
    for(const auto& p : aligned.paths.back())
        gts.push_back(dataset::load_image(p));
    const auto selected = dataset::select_training_frames(gts, o.min_fg);
    if(selected.empty())
        throw DataError("no training frame reaches the foreground threshold " + std::to_string(o.min_fg));
    std::vector<fusion::TrainingSample> samples(selected.size());
    parallel_for(selected.size(), g.threads, [&](std::size_t k) {
        const std::size_t i = selected[k];
        std::vector<Mask> stack;
        for(std::size_t d = 0; d < o.masks.size(); ++d)
            stack.push_back(dataset::load_image(aligned.paths[d][i]));
        samples[k] = fusion::make_training_sample(stack, gts[i], cfg.input_size);
    });

    auto params = fusion::build_network<float>(cfg, g.seed);
    if(init)
        fusion::import_encoder(params, init->params);
    std::ostringstream log;
    log << "epoch,loss\n" << std::setprecision(9);
    const auto result = fusion::train(params, cfg, samples, tc, [&](std::uint32_t e, double loss) {
        log << e << ',' << loss << '\n';
        return true;
    });
    fusion::save_checkpoint(params, cfg, o.out);
    if(!o.loss_log.empty())
        write_text(o.loss_log, log.str());
    out << "trained on " << result.used_samples << " of " << aligned.numbers.size() << " frames ("
        << result.skipped_samples << " single-class skipped), " << o.epochs << " epochs, final loss "
        << std::setprecision(6) << result.loss_history.back() << "\ncheckpoint: " << o.out << "\n";
    return kExitOk;
}

int cmd_fuse_apply(const Globals& g, const ApplyOpts& o, std::ostream& out) {
    const auto ckpt = fusion::load_checkpoint(o.checkpoint);
    if(ckpt.config.input_channels != o.masks.size())
        throw DataError("checkpoint expects " + std::to_string(ckpt.config.input_channels) + " mask streams, got " +
                        std::to_string(o.masks.size()));
    const auto aligned = align_dirs(o.masks, "bin");
    fs::create_directories(o.out);
    parallel_for(aligned.numbers.size(), g.threads, [&](std::size_t i) {
        const auto stack = load_stack(aligned, i);
        const Mask fused = fusion::predict_mask(ckpt.params, ckpt.config, stack, stack[0].height(), stack[0].width());
        dataset::save_mask(fused, fs::path(o.out) / dataset::numbered_name("bin", aligned.numbers[i], ".png"));
    });
    out << "fused " << aligned.numbers.size() << " frames into " << o.out << "\n";
    return kExitOk;
}

int cmd_eval(const Globals& g, const EvalOpts& o, std::ostream& out) {
    const auto format = metrics::parse_report_format(o.format);
    const auto index = dataset::scan_cdnet(o.dataset);
    std::vector<const dataset::VideoEntry*> videos;
    for(const auto& v : index.videos)
        if(o.videos.empty() ||
           std::find(o.videos.begin(), o.videos.end(), v.category + "/" + v.name) != o.videos.end())
            videos.push_back(&v);
    for(const auto& want : o.videos)
        if(std::none_of(videos.begin(), videos.end(),
                        [&](const auto* v) { return v->category + "/" + v->name == want; }))
            throw DataError("video " + want + " not found under " + o.dataset);
    std::vector<metrics::VideoResult> results(videos.size());
    parallel_for(videos.size(), g.threads, [&](std::size_t k) {
        const auto& v = *videos[k];
        const fs::path dir = fs::path(o.results) / v.category / v.name / o.subdir;
        std::map<std::size_t, fs::path> preds;
        for(auto& f : dataset::list_numbered(dir, o.prefix, kMaskExtensions))
            preds.emplace(f.number, f.path);
        metrics::ConfusionCounts counts;
        for(const auto& fr : v.frames) {
            if(!v.evaluable(fr.number))
                continue;
            const auto it = preds.find(fr.number);
            if(it == preds.end())
                throw DataError("video " + v.category + "/" + v.name + ": no result mask for frame " +
                                std::to_string(fr.number) + " in " + dir.string());
            counts += metrics::confusion(dataset::load_image(it->second), dataset::load_image(fr.groundtruth));
        }
        if(counts.total() == 0)
            throw DataError("video " + v.category + "/" + v.name + ": no evaluable pixels");
        results[k] = metrics::VideoResult{v.category, v.name, metrics::metrics_from_counts(counts), counts};
    });
    const auto tree = metrics::aggregate(std::move(results));
    if(!o.out.empty())
        write_text(o.out, metrics::score_tree_to_json(tree));
    out << metrics::report(tree, format);
    return kExitOk;
}

int cmd_report(const Globals&, const ReportOpts& o, std::ostream& out) {
    const auto format = metrics::parse_report_format(o.format);
    std::ifstream f(o.scores, std::ios::binary);
    if(!f)
        throw DataError("cannot read " + o.scores);
    std::ostringstream text;
    text << f.rdbuf();
    const auto rendered = metrics::report(metrics::score_tree_from_json(text.str()), format);
    if(o.out.empty())
        out << rendered;
    else
        write_text(o.out, rendered);
    return kExitOk;
}

std::uint64_t default_seed() {
    const char* env = std::getenv("FUSELAB_SEED");
    if(!env || !*env)
        return 42;
    try {
        std::size_t used = 0;
        const auto v = std::stoull(env, &used);
        if(used == std::string(env).size())
            return v;
    } catch(const std::exception&) {
    }
    throw ConfigError(std::string("FUSELAB_SEED is not an unsigned integer: '") + env + "'");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Globals g;
    try {
        g.seed = default_seed();
    } catch(const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    CLI::App app{"fuselab: background-subtraction mask fusion toolkit"};
    app.name(args.empty() ? "fuselab" : fs::path(args[0]).filename().string());
    app.require_subcommand(1);
    app.set_config("--config", "", "Optional key=value file; [subcommand] sections or subcommand.key lines; flags override it");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.option_defaults()->always_capture_default();
    app.add_option("--seed", g.seed, "Global seed (default: $FUSELAB_SEED, else 42)");
    app.add_option("--threads", g.threads, "Worker threads for per-video/per-frame work")->check(CLI::Range(1u, 256u));

    SynthOpts so;
    auto* synth = app.add_subcommand("synth", "Write a synthetic dataset in CDnet layout (with simulated candidate masks)");
    synth->add_option("--out", so.out, "Dataset root")->required();
    synth->add_option("--category", so.category, "Category directory name");
    synth->add_option("--videos", so.videos, "Number of videos")->check(CLI::Range(1u, 1000u));
    synth->add_option("--width", so.width, "Frame width");
    synth->add_option("--height", so.height, "Frame height");
    synth->add_option("--frames", so.frames, "Frames per video");
    synth->add_option("--objects", so.objects, "Moving rectangles per video");
    synth->add_option("--min-size", so.min_size, "Smallest rectangle side");
    synth->add_option("--max-size", so.max_size, "Largest rectangle side");
    synth->add_option("--max-speed", so.max_speed, "Largest per-axis speed (px/frame)");
    synth->add_option("--noise", so.noise, "Background noise sigma");

    BgsOpts bo;
    auto* bgs_cmd = app.add_subcommand("bgs", "Run a background model over a directory of inNNNNNN frames");
    bgs_cmd->add_option("--input", bo.input, "Frame directory")->required();
    bgs_cmd->add_option("--algo", bo.algo, "gmm | sc | median")->required();
    bgs_cmd->add_option("--out", bo.out, "Output mask directory")->required();

    VoteOpts vo;
    auto* vote = app.add_subcommand("vote", "Majority vote or boolean expression over mask directories");
    vote->add_option("--masks", vo.masks, "Mask directory (repeat; named A, B, C... in order)")->required();
    vote->add_option("--expr", vo.expr, "Boolean expression, e.g. \"(A AND B) OR C\" (default: majority vote)");
    vote->add_flag("--median", vo.median, "Apply a 3x3 median filter to the result");
    vote->add_option("--out", vo.out, "Output mask directory")->required();

    TrainOpts to;
    auto* ftrain = app.add_subcommand("fuse-train", "Train the fusion network and write a checkpoint");
    ftrain->add_option("--masks", to.masks, "Candidate mask directory (repeat)")->required();
    ftrain->add_option("--gt", to.gt, "Ground-truth directory (gtNNNNNN.png)")->required();
    ftrain->add_option("--out", to.out, "Checkpoint path")->required();
    ftrain->add_option("--arch", to.arch, "tiny | paper")->check(CLI::IsMember({"tiny", "paper"}));
    ftrain->add_option("--size", to.size, "Network input size (multiple of 32)");
    ftrain->add_option("--epochs", to.epochs, "Training epochs");
    ftrain->add_option("--batch", to.batch, "Mini-batch size");
    ftrain->add_option("--lr", to.lr, "Adam learning rate");
    ftrain->add_option("--min-fg", to.min_fg, "Minimum foreground fraction of a training frame");
    ftrain->add_option("--first", to.first, "First frame number used (0 = from the start)");
    ftrain->add_option("--last", to.last, "Last frame number used (0 = to the end)");
    ftrain->add_option("--init", to.init, "Checkpoint whose encoder initializes the network");
    ftrain->add_option("--loss-log", to.loss_log, "Write per-epoch loss as CSV");

    ApplyOpts ao;
    auto* fapply = app.add_subcommand("fuse-apply", "Fuse mask directories with a trained checkpoint");
    fapply->add_option("--checkpoint", ao.checkpoint, "Checkpoint path")->required();
    fapply->add_option("--masks", ao.masks, "Candidate mask directory (repeat, training order)")->required();
    fapply->add_option("--out", ao.out, "Output mask directory")->required();

    EvalOpts eo;
    auto* eval = app.add_subcommand("eval", "Score result masks against a CDnet-layout dataset");
    eval->add_option("--dataset", eo.dataset, "Dataset root")->required();
    eval->add_option("--results", eo.results, "Results root (<category>/<video>/<subdir>/<prefix>NNNNNN.png)")->required();
    eval->add_option("--subdir", eo.subdir, "Sub-directory inside each result video directory");
    eval->add_option("--prefix", eo.prefix, "Result mask file prefix");
    eval->add_option("--video", eo.videos, "Restrict to category/video (repeat)");
    eval->add_option("--out", eo.out, "Score tree JSON path");
    eval->add_option("--format", eo.format, "csv | markdown");

    ReportOpts ro;
    auto* rep = app.add_subcommand("report", "Render a score tree as CSV or markdown");
    rep->add_option("--scores", ro.scores, "Score tree JSON from eval")->required();
    rep->add_option("--format", ro.format, "csv | markdown");
    rep->add_option("--out", ro.out, "Output file (default: standard output)");

    for(auto* sub : app.get_subcommands({}))
        sub->allow_config_extras(CLI::config_extras_mode::error);

    std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(rev.begin(), rev.end());
    try {
        app.parse(rev);
    } catch(const CLI::ParseError& e) {
        if(e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if(*synth)
            return cmd_synth(g, so, out);
        if(*bgs_cmd)
            return cmd_bgs(g, bo, out);
        if(*vote)
            return cmd_vote(g, vo, out);
        if(*ftrain)
            return cmd_fuse_train(g, to, out);
        if(*fapply)
            return cmd_fuse_apply(g, ao, out);
        if(*eval)
            return cmd_eval(g, eo, out);
        if(*rep)
            return cmd_report(g, ro, out);
    } catch(const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch(const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch(const DataError& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch(const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch(const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace fuselab::cli
