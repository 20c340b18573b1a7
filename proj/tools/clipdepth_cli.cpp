// clipdepth: synth | train | eval | predict | gradcheck | analyze
//
// Every flag can also be given in a flat `key = value` file passed with
// --config (keys are the long flag names without the leading dashes, '#' starts a
// comment). Flags on the command line override the file.
//
// Exit status: 0 ok, 1 usage or configuration error, 2 data error.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "clipdepth/clipdepth.hpp"

using namespace clipdepth;
namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    // inputs and outputs
    std::string train_path, val_path, data_path, checkpoint_path, output, out_dir;
    std::string table = "random:1";
    // synth
    std::string preset = "nyu";
    std::uint32_t dim = 32;
    std::size_t frames = 20;
    double noise = 0.05;
    bool no_flip = false;
    // model
    std::uint32_t hidden = 0;
    double tau = 0.07;
    double dropout = 0.1;
    bool no_cls = false;
    // training
    TrainConfig train;
    std::string losses = "all";
    std::uint64_t max_steps = 0;
    std::uint64_t max_epochs = 0;
    // evaluation
    std::string crop = "none";
    std::string tta = "on";
    bool patch_level = false;
    std::string trim = "auto";
    // gradcheck
    std::size_t instances = 20;
};

void require(const std::string& value, const char* flag, const char* command) {
    if (value.empty()) throw UsageError(std::string(command) + " needs " + flag);
}

void require_file(const std::string& path, const char* flag, const char* command) {
    require(path, flag, command);
    if (!fs::is_regular_file(path)) throw UsageError(std::string(flag) + " " + path + " does not exist");
}

Tta parse_tta(const std::string& s) {
    if (s == "off") return Tta::off;
    if (s == "on") return Tta::on;
    if (s == "strict") return Tta::strict;
    throw ParameterError("unknown tta mode \"" + s + "\" (expected off, on, strict)");
}

EvalOptions eval_options(const Options& o) { return {CropSpec::parse(o.crop), parse_tta(o.tta), o.patch_level}; }

std::string timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

std::string hex(const ConfigHash& h) {
    std::string s;
    char b[3];
    for (auto v : h) {
        std::snprintf(b, sizeof b, "%02x", v);
        s += b;
    }
    return s;
}

Model<float> build_model(const Options& o, const DatasetSpec& spec) {
    ModelConfig mc;
    mc.dim = spec.dim;
    mc.hidden = o.hidden;
    mc.bins = spec.bins;
    mc.tau = o.tau;
    mc.dropout = o.dropout;
    mc.use_cls = !o.no_cls;
    mc.range_min = spec.range_min;
    mc.range_max = spec.range_max;
    const std::string prefix = "random:";
    if (o.table.rfind(prefix, 0) == 0) {
        std::uint64_t table_seed = 0;
        try {
            table_seed = std::stoull(o.table.substr(prefix.size()));
        } catch (const std::exception&) {
            throw UsageError("--table " + o.table + " is not random:<seed> or a PCTB path");
        }
        return make_model<float>(mc, o.train.seed, nullptr, table_seed);
    }
    require_file(o.table, "--table", "model setup");
    const TableInit init = read_pctb(o.table);
    return make_model<float>(mc, o.train.seed, &init, 0);
}

std::set<std::size_t> trim_bins(const std::string& s, const DatasetSpec& spec) {
    std::set<std::size_t> out;
    if (s == "none") return out;
    if (s == "auto") {
        // drop the near-field bin indoors and the far bins outdoors
        if (spec.range_max <= 10.0f) return {0};
        for (std::size_t b = spec.bins >= 3 ? spec.bins - 3 : 0; b < spec.bins; ++b) out.insert(b);
        return out;
    }
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.insert(std::stoul(item));
        } catch (const std::exception&) {
            throw UsageError("--trim expects auto, none or comma-separated bin indices, got " + s);
        }
    }
    return out;
}

Dataset load_dataset(const std::string& path, const char* flag, const char* command) {
    require_file(path, flag, command);
    Dataset ds = read_pceb(path);
    ds.validate();
    return ds;
}

int cmd_synth(const Options& o) {
    require(o.output, "--output", "synth");
    DatasetSpec spec;
    if (o.preset == "nyu") {
        spec = DatasetSpec::nyu(o.dim);
    } else if (o.preset == "kitti") {
        spec = DatasetSpec::kitti(o.dim);
    } else {
        throw UsageError("--preset must be nyu or kitti");
    }
    const auto s = synth_generate(o.train.seed, spec, o.frames, o.noise, SynthOptions{!o.no_flip, true});
    write_pceb(o.output, s.data);
    std::cout << "wrote " << s.data.frames.size() << " frames to " << o.output << '\n';
    return 0;
}

int cmd_train(Options o) {
    require(o.out_dir, "--out-dir", "train");
    const Dataset train = load_dataset(o.train_path, "--train", "train");
    const Dataset val = load_dataset(o.val_path, "--val", "train");
    if (!(train.spec == val.spec)) throw DataError("train and val files have different geometry");
    o.train.loss_set = parse_loss_set(o.losses);
    o.train.crop = CropSpec::parse(o.crop);
    Trainer trainer(o.train, build_model(o, train.spec));

    fs::create_directories(o.out_dir);
    std::ofstream log(fs::path(o.out_dir) / "metrics.log", std::ios::trunc);
    if (!log) throw DataError("cannot write metrics log in " + o.out_dir);
    log << "# started " << timestamp() << " config " << hex(trainer.config_hash()) << '\n';

    FitOptions fo;
    fo.max_steps = o.max_steps;
    fo.max_epochs = o.max_epochs;
    fo.checkpoint_dir = o.out_dir;
    fo.log = &log;
    fo.eval = eval_options(o);
    const auto r = trainer.fit(train, val, fo);
    save_checkpoint(fs::path(o.out_dir) / "last.pckp", trainer.checkpoint());
    std::cout << "trained " << r.steps << " steps over " << r.epochs << " epochs"
              << (r.early_stopped ? " (early stop)" : "") << "\n" << format_report(r.last);
    return 0;
}

Model<float> load_checkpoint_model(const Options& o, const char* command) {
    require_file(o.checkpoint_path, "--checkpoint", command);
    return load_model(load_checkpoint(o.checkpoint_path));
}

void check_compatible(const Model<float>& m, const DatasetSpec& spec) {
    if (m.config.dim != spec.dim) {
        throw DataError("checkpoint width " + std::to_string(m.config.dim) + " differs from data width " +
                        std::to_string(spec.dim));
    }
}

int cmd_eval(const Options& o) {
    const auto model = load_checkpoint_model(o, "eval");
    const Dataset ds = load_dataset(o.data_path, "--data", "eval");
    check_compatible(model, ds.spec);
    std::cout << format_report(evaluate_dataset(ds, model, eval_options(o)));
    return 0;
}

int cmd_predict(const Options& o) {
    require(o.out_dir, "--out-dir", "predict");
    const auto model = load_checkpoint_model(o, "predict");
    const Dataset ds = load_dataset(o.data_path, "--data", "predict");
    check_compatible(model, ds.spec);
    fs::create_directories(o.out_dir);
    const Tta tta = parse_tta(o.tta);
    for (const auto& f : ds.frames) {
        const auto depth = predict_pixels(f, ds.spec, model, tta);
        char name[64];
        std::snprintf(name, sizeof name, "frame_%06zu.pgm", f.frame_id);
        write_file_bytes(fs::path(o.out_dir) / name, encode_depth_pgm(depth, ds.spec.d_min, ds.spec.d_max));
    }
    std::cout << "wrote " << ds.frames.size() << " depth maps to " << o.out_dir << '\n';
    return 0;
}

int cmd_analyze(const Options& o) {
    require(o.out_dir, "--out-dir", "analyze");
    const auto model = load_checkpoint_model(o, "analyze");
    const Dataset ds = load_dataset(o.data_path, "--data", "analyze");
    check_compatible(model, ds.spec);
    const auto opt = eval_options(o);
    const auto mask = crop_mask(opt.crop, ds.spec.img_h, ds.spec.img_w);
    std::vector<double> gt, pred;
    for (const auto& f : ds.frames) {
        if (!f.pixel_depth) throw DataError("frame " + std::to_string(f.frame_id) + " has no ground-truth depth");
        const auto p = predict_pixels(f, ds.spec, model, opt.tta);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double g = (*f.pixel_depth)[i];
            if (!mask[i] || !std::isfinite(g) || g < ds.spec.d_min || g > ds.spec.d_max) continue;
            gt.push_back(g);
            pred.push_back(p[i]);
        }
    }
    const auto edges = bin_edges(ds.spec.range_min, ds.spec.range_max, ds.spec.bins);
    const auto tables = analysis_tables(gt, pred, edges, trim_bins(o.trim, ds.spec));
    write_analysis_csv(o.out_dir, tables);
    std::cout << "wrote analysis tables for " << gt.size() << " pixels to " << o.out_dir << '\n';
    return 0;
}

int cmd_gradcheck(const Options& o) {
    const auto r = run_gradient_suite(o.train.seed, o.instances);
    bool ok = true;
    for (std::size_t i = 0; i < kObjectives.size(); ++i) {
        std::printf("%-8s max_rel_err %.3e\n", std::string(objective_name(kObjectives[i])).c_str(), r.max_error[i]);
        ok = ok && r.max_error[i] <= 1e-4;
    }
    std::printf("checked %zu coordinates over %zu instances: %s\n", r.coordinates, r.instances, ok ? "ok" : "FAILED");
    return ok ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"Depth-bin head over frozen patch embeddings"};
    app.set_config("--config", "", "flat key = value file; flags override it");
    app.require_subcommand(1, 1);

    app.add_option("--train", o.train_path, "training PCEB file");
    app.add_option("--val", o.val_path, "validation PCEB file");
    app.add_option("--data", o.data_path, "PCEB file to evaluate, predict or analyze");
    app.add_option("--checkpoint", o.checkpoint_path, "PCKP checkpoint to load");
    app.add_option("--output", o.output, "output file (synth)");
    app.add_option("--out-dir", o.out_dir, "output directory");
    app.add_option("--table", o.table, "depth table init: PCTB path or random:<seed>")->capture_default_str();

    app.add_option("--preset", o.preset, "synth geometry: nyu or kitti")->capture_default_str();
    app.add_option("--dim", o.dim, "synth embedding width")->capture_default_str();
    app.add_option("--frames", o.frames, "synth frame count")->capture_default_str();
    app.add_option("--noise", o.noise, "synth off-plane noise")->capture_default_str();
    app.add_flag("--no-flip", o.no_flip, "synth without flipped embeddings");

    app.add_option("--hidden", o.hidden, "MLP hidden width, 0 = embedding width")->capture_default_str();
    app.add_option("--tau", o.tau, "softmax temperature")->capture_default_str();
    app.add_option("--dropout", o.dropout, "MLP dropout rate")->capture_default_str();
    app.add_flag("--no-cls", o.no_cls, "rotate without the CLS vector");

    auto& tc = o.train;
    app.add_option("--seed", tc.seed, "seed for model init, shuffling, dropout and synth")->capture_default_str();
    app.add_option("--period", tc.alternation_period, "steps per training phase")->capture_default_str();
    app.add_option("--batch-size", tc.batch_size, "frames per step")->capture_default_str();
    app.add_option("--emb-lr", tc.emb_lr, "embedding-phase learning rate")->capture_default_str();
    app.add_option("--emb-wd", tc.emb_wd, "embedding-phase weight decay")->capture_default_str();
    app.add_option("--depth-lr", tc.depth_lr, "depth-phase learning rate")->capture_default_str();
    app.add_option("--depth-wd", tc.depth_wd, "depth-phase weight decay")->capture_default_str();
    app.add_option("--lambda", tc.lambda_infonce, "InfoNCE weight in the embedding loss")->capture_default_str();
    app.add_option("--patience", tc.patience, "epochs without improvement before stopping")->capture_default_str();
    app.add_option("--decay-start", tc.decay_start, "stalled epochs before the learning rate decays")
        ->capture_default_str();
    app.add_option("--decay-floor", tc.decay_floor, "final learning rate fraction")->capture_default_str();
    app.add_flag("--freeze-mlps", tc.freeze_mlps, "keep both MLPs at their initial values");
    app.add_option("--losses", o.losses, "infonce, infonce+align or all")->capture_default_str();
    app.add_option("--max-steps", o.max_steps, "optimizer step budget, 0 = unlimited")->capture_default_str();
    app.add_option("--max-epochs", o.max_epochs, "epoch budget, 0 = until early stop")->capture_default_str();

    app.add_option("--crop", o.crop, "none, eigen or garg")->capture_default_str();
    app.add_option("--tta", o.tta, "flip averaging: off, on or strict")->capture_default_str();
    app.add_flag("--patch-level", o.patch_level, "score patch predictions against patch targets");
    app.add_option("--trim", o.trim, "analysis gt bins to drop: auto, none or i,j,...")->capture_default_str();
    app.add_option("--instances", o.instances, "gradcheck instance count")->capture_default_str();

    int status = 0;
    auto verb = [&](const char* name, const char* help, auto fn) {
        app.add_subcommand(name, help)->fallthrough()->callback([&, fn] { status = fn(o); });
    };
    verb("synth", "write a synthetic PCEB file", cmd_synth);
    verb("train", "train a model, writing checkpoints and a metrics log", cmd_train);
    verb("eval", "print metrics of a checkpoint on a dataset", cmd_eval);
    verb("predict", "write PGM depth maps", cmd_predict);
    verb("gradcheck", "compare analytic and numeric loss gradients", cmd_gradcheck);
    verb("analyze", "write per-depth-bin CSV tables", cmd_analyze);

    if (argc > 1 && argv[1][0] != '-' && !app.get_subcommand_no_throw(argv[1])) {
        std::cerr << "error: unknown command \"" << argv[1] << "\"\n" << app.help();
        return 1;
    }
    try {
        app.parse(argc, argv);
        return status;
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n' << app.help();
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
