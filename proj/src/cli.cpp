#include "rcnn/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "rcnn/checkpoint.hpp"
#include "rcnn/data.hpp"
#include "rcnn/gradcheck.hpp"
#include "rcnn/inference.hpp"

namespace rcnn::cli {
namespace {

namespace fs = std::filesystem;

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ArgumentError("config: bad integer for " + key + ": '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ArgumentError("config: bad number for " + key + ": '" + value + "'");
    }
}

TrainMode parse_mode(const std::string& value) {
    if (value == "lsbp") return TrainMode::kLsbp;
    if (value == "fixed_even") return TrainMode::kFixedEven;
    if (value == "pretrain_2d") return TrainMode::kPretrain2D;
    throw ArgumentError("config: mode must be lsbp, fixed_even or pretrain_2d, got '" + value +
                        "'");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

void RunSpec::apply(const std::string& key, const std::string& value) {
    auto& m = model;
    auto& t = train;
    if (key == "cliques") m.cliques = parse_int(key, value);
    else if (key == "max_frames") m.max_frames = parse_int(key, value);
    else if (key == "min_frames") m.min_frames = parse_int(key, value);
    else if (key == "classes") m.classes = parse_int(key, value);
    else if (key == "frame_h") m.frame_h = parse_int(key, value);
    else if (key == "frame_w") m.frame_w = parse_int(key, value);
    else if (key == "channels") m.channels = parse_int(key, value);
    else if (key == "conv1_kernels") m.conv1_kernels = parse_int(key, value);
    else if (key == "conv2_kernels") m.conv2_kernels = parse_int(key, value);
    else if (key == "conv3_kernels") m.conv3_kernels = parse_int(key, value);
    else if (key == "conv1_h") m.conv1.h = parse_int(key, value);
    else if (key == "conv1_w") m.conv1.w = parse_int(key, value);
    else if (key == "conv1_t") m.conv1.t = parse_int(key, value);
    else if (key == "conv2_h") m.conv2.h = parse_int(key, value);
    else if (key == "conv2_w") m.conv2.w = parse_int(key, value);
    else if (key == "conv2_t") m.conv2.t = parse_int(key, value);
    else if (key == "conv3_h") m.conv3.h = parse_int(key, value);
    else if (key == "conv3_w") m.conv3.w = parse_int(key, value);
    else if (key == "pool1_h") m.pool1.h = parse_int(key, value);
    else if (key == "pool1_w") m.pool1.w = parse_int(key, value);
    else if (key == "pool2_h") m.pool2.h = parse_int(key, value);
    else if (key == "pool2_w") m.pool2.w = parse_int(key, value);
    else if (key == "hidden_units") m.hidden_units = parse_int(key, value);
    else if (key == "anchor_frames") m.anchor_frames = parse_int(key, value);
    else if (key == "learning_rate") t.learning_rate = parse_double(key, value);
    else if (key == "reg_lambda") t.reg_lambda = parse_double(key, value);
    else if (key == "max_iterations") t.max_iterations = parse_int(key, value);
    else if (key == "convergence_tol") t.convergence_tol = parse_double(key, value);
    else if (key == "seed") t.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "mode") t.mode = parse_mode(value);
    else throw ArgumentError("config: unknown key '" + key + "'");
}

void RunSpec::apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ArgumentError("config file line " + std::to_string(line_no) +
                                ": expected key = value");
        apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void RunSpec::echo(std::ostream& out) const {
    const auto& m = model;
    const auto& t = train;
    out << "cliques = " << m.cliques << "\nmax_frames = " << m.max_frames
        << "\nmin_frames = " << m.min_frames << "\nclasses = " << m.classes
        << "\nframe_h = " << m.frame_h << "\nframe_w = " << m.frame_w
        << "\nchannels = " << m.channels << "\nconv1_kernels = " << m.conv1_kernels
        << "\nconv2_kernels = " << m.conv2_kernels << "\nconv3_kernels = " << m.conv3_kernels
        << "\nconv1_h = " << m.conv1.h << "\nconv1_w = " << m.conv1.w
        << "\nconv1_t = " << m.conv1.t << "\nconv2_h = " << m.conv2.h
        << "\nconv2_w = " << m.conv2.w << "\nconv2_t = " << m.conv2.t
        << "\nconv3_h = " << m.conv3.h << "\nconv3_w = " << m.conv3.w
        << "\npool1_h = " << m.pool1.h << "\npool1_w = " << m.pool1.w
        << "\npool2_h = " << m.pool2.h << "\npool2_w = " << m.pool2.w
        << "\nhidden_units = " << m.hidden_units << "\nanchor_frames = " << m.anchor_frames
        << "\nlearning_rate = " << t.learning_rate << "\nreg_lambda = " << t.reg_lambda
        << "\nmax_iterations = " << t.max_iterations
        << "\nconvergence_tol = " << t.convergence_tol << "\nseed = " << t.seed
        << "\nmode = " << train_mode_name(t.mode) << "\nthreads = " << t.threads << "\n";
}

namespace {

struct CommonOpts {
    std::string config_file;
    std::string preset = "default";
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--config", c.config_file, "line-oriented key = value config file");
    cmd->add_option("--preset", c.preset, "base architecture: default, reduced or tiny")
        ->check(CLI::IsMember({"default", "reduced", "tiny"}));
    cmd->add_option("--set", c.overrides, "override, key=value (repeatable)");
    cmd->add_option("--seed", c.seed, "random seed");
    cmd->add_option("--threads", c.threads, "worker thread cap");
}

RunSpec build_spec(const CommonOpts& c) {
    RunSpec spec;
    if (c.preset == "reduced") spec.model = ModelConfig::reduced(spec.model.classes);
    else if (c.preset == "tiny") spec.model = ModelConfig::tiny();
    if (!c.config_file.empty()) spec.apply_file(c.config_file);
    for (const auto& kv : c.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ArgumentError("--set expects key=value, got '" + kv + "'");
        spec.apply(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
    if (c.seed) spec.train.seed = *c.seed;
    spec.train.threads = c.threads;
    spec.model.validate();
    std::cerr << "# effective configuration\n";
    spec.echo(std::cerr);
    return spec;
}

std::vector<VideoSample> load_entries(const DatasetManifest& manifest,
                                      const std::string& manifest_path) {
    return load_dataset(manifest, fs::path(manifest_path).parent_path().string());
}

std::string format_prob(double p) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", p);
    return buf;
}

// ---- synth ----------------------------------------------------------------

int run_synth(const CommonOpts& common, const std::string& out_dir, int classes, int per_class,
              int subjects, double noise, int folds) {
    RunSpec spec = build_spec(common);
    spec.model.classes = classes;
    spec.model.validate();
    SynthOptions opt;
    opt.seed = spec.train.seed;
    opt.classes = classes;
    opt.per_class = per_class;
    opt.subjects = subjects;
    opt.noise_sigma = static_cast<float>(noise);
    SynthDataset ds = synth_generate(opt, spec.model);
    if (folds > 0) ds.manifest = fold_split(std::move(ds.manifest), folds, spec.train.seed);
    save_synth_dataset(ds, out_dir);
    std::cout << "wrote " << ds.samples.size() << " samples to " << out_dir << "\n";
    return kExitOk;
}

// ---- preprocess -------------------------------------------------------------

int run_preprocess(const CommonOpts& common, const std::string& raw_dir,
                   const std::string& out_dir, int folds) {
    RunSpec spec = build_spec(common);
    std::ifstream listing(fs::path(raw_dir) / "raw_manifest.csv");
    if (!listing)
        throw IoError("missing raw_manifest.csv (dir,label,subject) in " + raw_dir);
    fs::create_directories(out_dir);

    DatasetManifest manifest;
    manifest.anchors = 30;
    manifest.frame_h = spec.model.frame_h;
    manifest.frame_w = spec.model.frame_w;
    manifest.channels = spec.model.channels;

    std::string line;
    int index = 0;
    while (std::getline(listing, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#' || line == "dir,label,subject") continue;
        std::istringstream is(line);
        std::string dir, tok;
        if (!std::getline(is, dir, ','))
            throw FormatError("raw_manifest.csv: bad line '" + line + "'", 0);
        ManifestEntry e;
        if (!std::getline(is, tok, ',')) throw FormatError("raw_manifest.csv: missing label", 0);
        e.label = parse_int("label", tok);
        if (!std::getline(is, tok, ',')) throw FormatError("raw_manifest.csv: missing subject", 0);
        e.subject = parse_int("subject", tok);

        Tensor<float> raw = load_raw_video((fs::path(raw_dir) / dir).string(),
                                           spec.model.channels);
        VideoSample sample;
        sample.frames = preprocess_video(raw, spec.model);
        sample.label = e.label;
        sample.subject = e.subject;
        char name[32];
        std::snprintf(name, sizeof name, "sample%04d.rgbd", index++);
        e.path = name;
        save_sample(sample, (fs::path(out_dir) / name).string());
        manifest.entries.push_back(std::move(e));
    }
    if (manifest.entries.empty()) throw FormatError("raw_manifest.csv lists no videos", 0);
    if (folds > 0) manifest = fold_split(std::move(manifest), folds, spec.train.seed);
    save_manifest(manifest, (fs::path(out_dir) / "manifest.csv").string());
    std::cout << "preprocessed " << manifest.entries.size() << " videos into " << out_dir << "\n";
    return kExitOk;
}

// ---- pretrain / train -------------------------------------------------------

int run_pretrain(const CommonOpts& common, const std::string& data, const std::string& out,
                 const std::string& log_path) {
    RunSpec spec = build_spec(common);
    spec.model.channels = 1;
    spec.model.validate();
    DatasetManifest manifest = load_manifest(data);
    std::vector<VideoSample> samples = load_entries(manifest, data);
    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path);
        if (!log) throw IoError("cannot open training log: " + log_path);
    }
    Parameters<float> params =
        pretrain(samples, spec.model, spec.train, log_path.empty() ? nullptr : &log);
    save_checkpoint(params, spec.model, out);
    std::cout << "pretrained checkpoint written to " << out << "\n";
    return kExitOk;
}

int run_train(const CommonOpts& common, const std::string& data, const std::string& out,
              const std::string& log_path, const std::string& init_from, int exclude_fold) {
    RunSpec spec = build_spec(common);
    DatasetManifest manifest = load_manifest(data);
    std::vector<VideoSample> all = load_entries(manifest, data);
    std::vector<VideoSample> samples;
    for (std::size_t i = 0; i < all.size(); ++i)
        if (exclude_fold <= 0 || manifest.entries[i].fold != exclude_fold)
            samples.push_back(std::move(all[i]));
    if (samples.empty()) throw ArgumentError("train: no samples left after fold exclusion");

    Parameters<float> init;
    if (!init_from.empty()) {
        auto [pre_params, pre_config] = load_checkpoint(init_from);
        if (!pre_config.same_architecture_except_channels(spec.model))
            throw ArgumentError("train: --init-from checkpoint architecture does not match");
        init = transfer_pretrained(pre_params, spec.model, spec.train.seed);
    } else {
        init = init_parameters<float>(spec.model, spec.train.seed);
    }

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path);
        if (!log) throw IoError("cannot open training log: " + log_path);
    }
    TrainState<float> state = lsbp_train(samples, std::move(init), spec.train, spec.model,
                                         log_path.empty() ? nullptr : &log);
    save_checkpoint(state.params, spec.model, out);
    std::cout << "trained " << state.iterations << " iterations ("
              << (state.converged ? "converged" : "max_iterations") << "), final cost "
              << state.cost_history.back() << ", checkpoint written to " << out << "\n";
    return kExitOk;
}

// ---- infer ------------------------------------------------------------------

int run_infer(const CommonOpts& common, const std::string& ckpt, const std::string& data,
              const std::string& out_path) {
    auto [params, config] = load_checkpoint(ckpt);
    DatasetManifest manifest = load_manifest(data);
    std::vector<VideoSample> samples = load_entries(manifest, data);

    std::ostringstream out;
    out << "path,predicted_label,probability";
    for (int i = 1; i <= config.cliques; ++i) out << ",s" << i << ",t" << i;
    out << "\n";
    std::vector<InferResult<float>> results(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        results[i] = infer(samples[i].frames, params, config, common.threads);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out << manifest.entries[i].path << "," << results[i].label << ","
            << format_prob(results[i].probability);
        for (int j = 0; j < config.cliques; ++j)
            out << "," << results[i].latent.starts[j] << "," << results[i].latent.lengths[j];
        out << "\n";
    }
    if (out_path.empty()) {
        std::cout << out.str();
    } else {
        std::ofstream f(out_path);
        if (!f) throw IoError("cannot open output: " + out_path);
        f << out.str();
    }
    return kExitOk;
}

// ---- eval -------------------------------------------------------------------

int run_eval(const CommonOpts& common, const std::string& data, int folds,
             const std::string& out_path) {
    RunSpec spec = build_spec(common);
    DatasetManifest manifest = load_manifest(data);
    bool has_folds = false;
    for (const auto& e : manifest.entries)
        if (e.fold > 0) has_folds = true;
    if (!has_folds) manifest = fold_split(std::move(manifest), folds, spec.train.seed);
    int max_fold = 0;
    for (const auto& e : manifest.entries) max_fold = std::max(max_fold, e.fold);
    std::vector<VideoSample> all = load_entries(manifest, data);

    const int k = spec.model.classes;
    std::vector<std::vector<int>> confusion(static_cast<std::size_t>(k),
                                            std::vector<int>(static_cast<std::size_t>(k), 0));
    std::vector<double> fold_acc;
    for (int f = 1; f <= max_fold; ++f) {
        std::vector<VideoSample> train_set, test_set;
        for (std::size_t i = 0; i < all.size(); ++i)
            (manifest.entries[i].fold == f ? test_set : train_set).push_back(all[i]);
        if (train_set.empty() || test_set.empty())
            throw ArgumentError("eval: fold " + std::to_string(f) + " leaves an empty split");

        Parameters<float> init = init_parameters<float>(
            spec.model, detail::mix_seed(spec.train.seed, static_cast<std::uint64_t>(f)));
        TrainState<float> state =
            lsbp_train(train_set, std::move(init), spec.train, spec.model, nullptr);

        int correct = 0;
        for (const auto& sample : test_set) {
            InferResult<float> r = infer(sample.frames, state.params, spec.model,
                                         spec.train.threads);
            ++confusion[static_cast<std::size_t>(sample.label - 1)]
                       [static_cast<std::size_t>(r.label - 1)];
            if (r.label == sample.label) ++correct;
        }
        fold_acc.push_back(double(correct) / double(test_set.size()));
        std::cerr << "# fold " << f << ": " << correct << "/" << test_set.size() << "\n";
    }

    std::ostringstream out;
    out << "class,correct,total,accuracy\n";
    for (int c = 0; c < k; ++c) {
        int total = 0;
        for (int j = 0; j < k; ++j) total += confusion[c][j];
        const int correct = confusion[c][c];
        out << c + 1 << "," << correct << "," << total << ","
            << (total ? double(correct) / total : 0.0) << "\n";
    }
    out << "fold,accuracy\n";
    double mean = 0.0;
    for (std::size_t f = 0; f < fold_acc.size(); ++f) {
        out << f + 1 << "," << fold_acc[f] << "\n";
        mean += fold_acc[f];
    }
    mean /= double(fold_acc.size());
    out << "mean_fold_accuracy," << mean << "\n";
    out << "confusion";
    for (int j = 0; j < k; ++j) out << ",pred" << j + 1;
    out << "\n";
    for (int c = 0; c < k; ++c) {
        out << "true" << c + 1;
        for (int j = 0; j < k; ++j) out << "," << confusion[c][j];
        out << "\n";
    }
    if (out_path.empty()) {
        std::cout << out.str();
    } else {
        std::ofstream f(out_path);
        if (!f) throw IoError("cannot open output: " + out_path);
        f << out.str();
    }
    return kExitOk;
}

// ---- gradcheck ----------------------------------------------------------------

int run_gradcheck(const CommonOpts& common) {
    ModelConfig config = ModelConfig::tiny();
    TrainConfig tc;
    tc.seed = common.seed.value_or(7);

    SynthOptions opt;
    opt.seed = tc.seed;
    opt.classes = config.classes;
    opt.per_class = 2;
    opt.subjects = 2;
    SynthDataset ds = synth_generate(opt, config);

    std::vector<VideoSampleT<double>> dataset;
    for (const auto& s : ds.samples) dataset.push_back(sample_cast<double>(s));
    Parameters<double> params = init_parameters<double>(config, tc.seed);
    std::vector<LatentVars> latent(dataset.size(),
                                   even_split(config.anchor_frames, config.cliques,
                                              config.min_frames, config.max_frames));

    GradCheckReport report =
        gradient_check(dataset, std::move(params), latent, tc.reg_lambda, config);
    std::cout << "parameters_checked=" << report.checked
              << " max_rel_err=" << format_prob(report.max_rel_err)
              << " worst_index=" << report.worst_index
              << " analytic=" << format_prob(report.worst_analytic)
              << " fd=" << format_prob(report.worst_fd) << "\n";
    if (!(report.max_rel_err <= 1e-4)) {
        std::cerr << "gradient check FAILED: max relative error " << report.max_rel_err
                  << " > 1e-4\n";
        return kExitNumeric;
    }
    return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"reconfigurable spatio-temporal activity recognition"};
    app.require_subcommand(1);

    CommonOpts common;

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic activity dataset");
    std::string synth_out;
    int synth_classes = 3, synth_per_class = 10, synth_subjects = 4, synth_folds = 0;
    double synth_noise = 0.05;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--classes", synth_classes, "activity classes");
    synth->add_option("--per-class", synth_per_class, "samples per class");
    synth->add_option("--subjects", synth_subjects, "distinct subjects (round-robin)");
    synth->add_option("--noise", synth_noise, "additive pixel noise sigma");
    synth->add_option("--folds", synth_folds, "assign this many subject-wise folds");
    add_common(synth, common);

    // preprocess
    auto* prep = app.add_subcommand("preprocess", "raw frame-plane videos -> sample containers");
    std::string prep_raw, prep_out;
    int prep_folds = 0;
    prep->add_option("--raw", prep_raw, "raw dataset directory")->required();
    prep->add_option("--out", prep_out, "output directory")->required();
    prep->add_option("--folds", prep_folds, "assign this many subject-wise folds");
    add_common(prep, common);

    // pretrain
    auto* pre = app.add_subcommand("pretrain", "train a single-channel model, even segmentation");
    std::string pre_data, pre_out, pre_log;
    pre->add_option("--data", pre_data, "dataset manifest")->required();
    pre->add_option("--out", pre_out, "checkpoint path")->required();
    pre->add_option("--log", pre_log, "training log CSV");
    add_common(pre, common);

    // train
    auto* train = app.add_subcommand("train", "train the two-channel model");
    std::string train_data, train_out, train_log, train_init;
    int train_exclude_fold = 0;
    std::string train_mode;
    train->add_option("--data", train_data, "dataset manifest")->required();
    train->add_option("--out", train_out, "checkpoint path")->required();
    train->add_option("--log", train_log, "training log CSV");
    train->add_option("--init-from", train_init, "pretrained single-channel checkpoint");
    train->add_option("--mode", train_mode, "lsbp or fixed_even")
        ->check(CLI::IsMember({"lsbp", "fixed_even"}));
    train->add_option("--exclude-fold", train_exclude_fold, "hold out this fold");
    add_common(train, common);

    // infer
    auto* inf = app.add_subcommand("infer", "predict labels and segmentations");
    std::string inf_ckpt, inf_data, inf_out;
    inf->add_option("--checkpoint", inf_ckpt, "model checkpoint")->required();
    inf->add_option("--data", inf_data, "dataset manifest")->required();
    inf->add_option("--out", inf_out, "output CSV (stdout when omitted)");
    add_common(inf, common);

    // eval
    auto* eval = app.add_subcommand("eval", "cross-validated train + test over folds");
    std::string eval_data, eval_out;
    int eval_folds = 4;
    eval->add_option("--data", eval_data, "dataset manifest")->required();
    eval->add_option("--folds", eval_folds, "folds when the manifest has none");
    eval->add_option("--out", eval_out, "output CSV (stdout when omitted)");
    add_common(eval, common);

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    add_common(gc, common);

    std::vector<const char*> argv;
    argv.push_back("rcnn");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (synth->parsed())
            return run_synth(common, synth_out, synth_classes, synth_per_class, synth_subjects,
                             synth_noise, synth_folds);
        if (prep->parsed()) return run_preprocess(common, prep_raw, prep_out, prep_folds);
        if (pre->parsed()) return run_pretrain(common, pre_data, pre_out, pre_log);
        if (train->parsed()) {
            if (!train_mode.empty()) common.overrides.push_back("mode=" + train_mode);
            return run_train(common, train_data, train_out, train_log, train_init,
                             train_exclude_fold);
        }
        if (inf->parsed()) return run_infer(common, inf_ckpt, inf_data, inf_out);
        if (eval->parsed()) return run_eval(common, eval_data, eval_folds, eval_out);
        if (gc->parsed()) return run_gradcheck(common);
        std::cerr << "no subcommand\n";
        return kExitUsage;
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}

}  // namespace rcnn::cli
