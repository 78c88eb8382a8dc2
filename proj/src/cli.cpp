#include "dlpr/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "dlpr/baselines.hpp"
#include "dlpr/dataio.hpp"
#include "dlpr/error.hpp"
#include "dlpr/features.hpp"
#include "dlpr/nn/gradcheck.hpp"
#include "dlpr/nn/serialize.hpp"
#include "dlpr/trainer.hpp"

namespace dlpr::cli {
namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct WindowFlags {
    std::optional<std::size_t> window, shift;
    std::optional<double> window_ms, increment_ms;
};

void add_window_flags(CLI::App* cmd, WindowFlags& w, const std::string& window_note = " (default 300)",
                      const std::string& shift_note = " (default 50)") {
    auto* win = cmd->add_option("--window", w.window, "Window length in samples" + window_note);
    auto* sh = cmd->add_option("--shift", w.shift, "Window shift in samples" + shift_note);
    auto* wms = cmd->add_option("--window-ms", w.window_ms, "Window length in ms (floor at the recording rate)");
    auto* ims = cmd->add_option("--increment-ms", w.increment_ms, "Window increment in ms");
    win->excludes(wms)->excludes(ims);
    sh->excludes(wms)->excludes(ims);
}

// Resolves window/shift in samples. ms flags need one common sampling rate.
std::pair<std::size_t, std::size_t> resolve_window(const WindowFlags& w, const std::vector<data::Recording>& recs,
                                                   std::size_t def_window, std::size_t def_shift) {
    if (w.window_ms || w.increment_ms) {
        if (!w.window_ms || !w.increment_ms) throw UsageError("--window-ms and --increment-ms go together");
        const double rate = recs.front().sampling_rate;
        for (const auto& r : recs)
            if (r.sampling_rate != rate)
                throw Error(ErrorKind::ConfigError, "ms windows need a common sampling rate across recordings");
        return {data::ms_to_samples(rate, *w.window_ms), data::ms_to_samples(rate, *w.increment_ms)};
    }
    return {w.window.value_or(def_window), w.shift.value_or(def_shift)};
}

std::vector<int> parse_label_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto dash = item.find('-');
        try {
            if (dash == std::string::npos) {
                out.push_back(std::stoi(item));
            } else {
                const int lo = std::stoi(item.substr(0, dash));
                const int hi = std::stoi(item.substr(dash + 1));
                if (hi < lo) throw UsageError("bad label range " + item);
                for (int l = lo; l <= hi; ++l) out.push_back(l);
            }
        } catch (const std::logic_error&) {
            throw UsageError("bad label list '" + text + "'");
        }
    }
    return out;
}

struct SplitFlags {
    double train_fraction = 0.6;
    bool no_stratify = false;
    bool by_repetition = false;

    void add(CLI::App* cmd) {
        cmd->add_option("--train-fraction", train_fraction, "Training share of the windows")->capture_default_str();
        cmd->add_flag("--no-stratify", no_stratify, "Disable per-class stratification of the split");
        cmd->add_flag("--split-by-repetition", by_repetition, "Assign whole repetitions to train or test");
    }

    data::SplitSpec spec(std::uint64_t seed) const {
        return {train_fraction, seed, !no_stratify, by_repetition};
    }
};

struct TrainFlags {
    std::string data_dir;
    WindowFlags window;
    std::size_t batch = 100;
    std::size_t epochs = 50;
    std::optional<std::uint64_t> seed;
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    std::string arch = "auto";
    std::string keep_labels;
    SplitFlags split;

    void add(CLI::App* cmd, bool with_batch = true) {
        cmd->add_option("--data", data_dir, "Directory of recording CSVs")->required();
        add_window_flags(cmd, window);
        if (with_batch) cmd->add_option("--batch", batch, "Mini-batch size")->capture_default_str();
        cmd->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
        cmd->add_option("--seed", seed, "Seed for initialization, shuffling and the split (required)");
        cmd->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
        cmd->add_option("--beta1", beta1, "Adam beta1")->capture_default_str();
        cmd->add_option("--beta2", beta2, "Adam beta2")->capture_default_str();
        cmd->add_option("--adam-eps", adam_eps, "Adam epsilon")->capture_default_str();
        cmd->add_option("--arch", arch, "Kernel schedule: auto | canonical | compact")
            ->check(CLI::IsMember({"auto", "canonical", "compact"}))
            ->capture_default_str();
        cmd->add_option("--keep-labels", keep_labels, "Restrict to labels, e.g. 0-12 or 0,3,5");
        split.add(cmd);
    }

    trainer::TrainConfig config() const {
        if (!seed) throw UsageError("--seed is required");
        trainer::TrainConfig cfg;
        cfg.batch_size = batch;
        cfg.epochs = epochs;
        cfg.seed = *seed;
        cfg.adam = {lr, beta1, beta2, adam_eps};
        cfg.arch = arch == "canonical" ? trainer::Arch::Canonical
                   : arch == "compact" ? trainer::Arch::Compact
                                       : trainer::Arch::Auto;
        cfg.dataset_id = data_dir;
        return cfg;
    }
};

data::WindowedDataset load_preproc(const std::string& dir, const WindowFlags& wf, const std::string& keep) {
    const auto recs = data::load_directory(dir);
    const auto [window, shift] = resolve_window(wf, recs, 300, 50);
    auto ds = data::build_preproc_dataset(recs, window, shift);
    if (!keep.empty()) {
        const auto labels = parse_label_list(keep);
        ds = data::filter_labels(ds, labels);
        if (ds.empty()) throw Error(ErrorKind::EmptyOutput, "no windows left after --keep-labels");
    }
    return ds;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::ParseError, "cannot write " + path.string());
    out << text;
}

std::string summary_line(const trainer::Metrics& m) {
    std::ostringstream s;
    s << "batch_size=" << m.batch_size << " epochs=" << m.epochs << " accuracy=" << data::format_double(m.accuracy)
      << " training_time_sec=" << m.training_time_sec;
    return s.str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"DLPR: spectral-moment preprocessing and 1-D CNN classification of multichannel sEMG"};
    app.name("dlpr");
    app.require_subcommand(1);

    // synth
    data::SynthConfig synth;
    std::string synth_out;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a separable synthetic EMG dataset");
    synth_cmd->add_option("--classes", synth.classes, "Number of classes (>= 2)")->required();
    synth_cmd->add_option("--channels", synth.channels, "Number of channels")->required();
    synth_cmd->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
    synth_cmd->add_option("--rate", synth.sampling_rate, "Sampling rate in Hz")->capture_default_str();
    synth_cmd->add_option("--windows-per-class", synth.windows_per_class, "Windows per class at --window/--shift")
        ->capture_default_str();
    synth_cmd->add_option("--window", synth.window, "Window used to size class segments")->capture_default_str();
    synth_cmd->add_option("--shift", synth.shift, "Shift used to size class segments")->capture_default_str();
    synth_cmd->add_option("--envelope-ratio", synth.envelope_ratio, "Loudest/quietest envelope level")
        ->capture_default_str();
    synth_cmd->add_option("--subject", synth.subject_id, "Subject id written to the metadata")->capture_default_str();
    synth_cmd->add_option("--out", synth_out, "Output directory")->required();

    // preprocess
    std::string pre_data, pre_out;
    WindowFlags pre_window;
    auto* pre_cmd = app.add_subcommand("preprocess", "Write MPP/MZP rows for every window");
    pre_cmd->add_option("--data", pre_data, "Directory of recording CSVs")->required();
    add_window_flags(pre_cmd, pre_window);
    pre_cmd->add_option("--out", pre_out, "Output CSV")->required();

    // features
    std::string feat_data, feat_out;
    WindowFlags feat_window;
    features::Thresholds thr;
    bool classify = false;
    std::optional<std::uint64_t> feat_seed;
    std::size_t knn_k = 5;
    std::string priors = "empirical";
    SplitFlags feat_split;
    auto* feat_cmd = app.add_subcommand("features", "Extract TD features; optionally score k-NN and LDA baselines");
    feat_cmd->add_option("--data", feat_data, "Directory of recording CSVs")->required();
    add_window_flags(feat_cmd, feat_window, " (default: 200 ms via --window-ms)", " (default: 75 ms via --increment-ms)");
    feat_cmd->add_option("--zc-threshold", thr.zc, "Zero-crossing amplitude threshold")->capture_default_str();
    feat_cmd->add_option("--ssc-threshold", thr.ssc, "Slope-sign-change threshold")->capture_default_str();
    feat_cmd->add_option("--out", feat_out, "Feature CSV output");
    feat_cmd->add_flag("--classify", classify, "Split and report k-NN / LDA test accuracy");
    feat_cmd->add_option("--seed", feat_seed, "Split seed (required with --classify)");
    feat_cmd->add_option("--k", knn_k, "Neighbours for k-NN")->capture_default_str();
    feat_cmd->add_option("--priors", priors, "LDA priors: empirical | equal")
        ->check(CLI::IsMember({"empirical", "equal"}))
        ->capture_default_str();
    feat_split.add(feat_cmd);

    // train
    TrainFlags train;
    std::string train_out;
    auto* train_cmd = app.add_subcommand("train", "Train the DLPR network on a 60/40 split");
    train.add(train_cmd);
    train_cmd->add_option("--out", train_out, "Run directory")->required();

    // eval
    std::string eval_model, eval_data, eval_out, eval_keep;
    WindowFlags eval_window;
    std::optional<std::uint64_t> eval_seed;
    SplitFlags eval_split;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a trained model");
    eval_cmd->add_option("--model", eval_model, "Model file (.dlprm)")->required();
    eval_cmd->add_option("--data", eval_data, "Directory of recording CSVs")->required();
    add_window_flags(eval_cmd, eval_window);
    eval_cmd->add_option("--seed", eval_seed, "Evaluate only the test partition of this split seed");
    eval_cmd->add_option("--keep-labels", eval_keep, "Restrict to labels, e.g. 0-12");
    eval_cmd->add_option("--out", eval_out, "Directory for metrics.json and confusion.csv");
    eval_split.add(eval_cmd);

    // sweep
    TrainFlags sweep;
    std::string sweep_out;
    std::vector<std::size_t> sweep_batches{50, 100, 150};
    auto* sweep_cmd = app.add_subcommand("sweep", "Train once per batch size");
    sweep.add(sweep_cmd, false);
    sweep_cmd->add_option("--batches", sweep_batches, "Batch sizes")->delimiter(',')->capture_default_str();
    sweep_cmd->add_option("--out", sweep_out, "Output directory")->required();

    // gradcheck
    std::uint64_t gc_seed = 42;
    auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every layer and the toy model");
    gc_cmd->add_option("--seed", gc_seed, "Seed for the random probes")->capture_default_str();

    // report
    TrainFlags report;
    std::string report_out, report_model;
    auto* report_cmd = app.add_subcommand("report", "Per-subject accuracy table (subject_id,dash_score,accuracy)");
    report.add(report_cmd);
    report_cmd->add_option("--model", report_model, "Evaluate this model instead of training per subject");
    report_cmd->add_option("--out", report_out, "CSV output (default: standard output)");

    std::vector<std::string> argv_store{"dlpr"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return kUsage;
    }

    try {
        if (*synth_cmd) {
            const auto recs = data::synth_dataset(synth);
            data::save_directory(recs, synth_out);
            out << "wrote " << recs.size() << " recordings to " << synth_out << "\n";
        } else if (*pre_cmd) {
            const auto recs = data::load_directory(pre_data);
            const auto [window, shift] = resolve_window(pre_window, recs, 300, 50);
            const auto ds = data::build_preproc_dataset(recs, window, shift);
            const std::size_t c = recs.front().channel_count();
            std::string text;
            for (std::size_t i = 1; i <= c; ++i) text += "mpp_ch" + std::to_string(i) + ",";
            for (std::size_t i = 1; i <= c; ++i) text += "mzp_ch" + std::to_string(i) + ",";
            text += "label\n";
            for (std::size_t i = 0; i < ds.size(); ++i) {
                for (double v : ds.inputs[i]) text += data::format_double(v) + ",";
                text += std::to_string(ds.labels[i]) + "\n";
            }
            write_file(pre_out, text);
            out << "wrote " << ds.size() << " windows to " << pre_out << "\n";
        } else if (*feat_cmd) {
            const auto recs = data::load_directory(feat_data);
            WindowFlags wf = feat_window;
            if (!wf.window && !wf.shift && !wf.window_ms && !wf.increment_ms) {
                wf.window_ms = 200.0;
                wf.increment_ms = 75.0;
            }
            const auto [window, shift] = resolve_window(wf, recs, 0, 0);
            const auto ds = features::extract_td_dataset(recs, window, shift, thr);
            if (!feat_out.empty()) {
                if (fs::path(feat_out).has_parent_path()) fs::create_directories(fs::path(feat_out).parent_path());
                features::write_feature_csv(ds, recs.front().channel_count(), feat_out);
            }
            out << "windows=" << ds.size() << " window=" << window << " shift=" << shift << "\n";
            if (classify) {
                if (!feat_seed) throw UsageError("--seed is required with --classify");
                const auto [tr, te] = data::split(ds, feat_split.spec(*feat_seed));
                const auto res = baselines::run_baselines(
                    tr, te, knn_k, priors == "equal" ? baselines::Priors::Equal : baselines::Priors::Empirical);
                out << "knn_accuracy=" << data::format_double(res.knn_accuracy)
                    << " lda_accuracy=" << data::format_double(res.lda_accuracy) << "\n";
            }
        } else if (*train_cmd) {
            const auto cfg = train.config();
            const auto ds = load_preproc(train.data_dir, train.window, train.keep_labels);
            const auto [tr, te] = data::split(ds, train.split.spec(cfg.seed));
            const auto result = trainer::train_dlpr(tr, te, cfg);
            trainer::write_run(result, train_out);
            out << summary_line(result.metrics) << "\n";
        } else if (*eval_cmd) {
            const auto model = nn::load_model(eval_model);
            auto ds = load_preproc(eval_data, eval_window, eval_keep);
            if (eval_seed) ds = data::split(ds, eval_split.spec(*eval_seed)).second;
            const auto m = trainer::evaluate(model, ds);
            if (!eval_out.empty()) {
                fs::create_directories(eval_out);
                write_file(fs::path(eval_out) / "metrics.json", trainer::metrics_to_json(m, false).dump(2) + "\n");
                write_file(fs::path(eval_out) / "confusion.csv", trainer::confusion_csv(m));
            }
            out << "accuracy=" << data::format_double(m.accuracy) << " windows=" << m.total << "\n";
        } else if (*sweep_cmd) {
            const auto cfg = sweep.config();
            const auto ds = load_preproc(sweep.data_dir, sweep.window, sweep.keep_labels);
            const auto [tr, te] = data::split(ds, sweep.split.spec(cfg.seed));
            const auto results = trainer::batch_sweep(tr, te, cfg, sweep_batches);
            std::string table = "batch_size,accuracy,training_time_sec\n";
            for (const auto& r : results) {
                trainer::write_run(r, fs::path(sweep_out) / ("batch_" + std::to_string(r.metrics.batch_size)));
                table += std::to_string(r.metrics.batch_size) + "," + data::format_double(r.metrics.accuracy) + "," +
                         data::format_double(r.metrics.training_time_sec) + "\n";
                out << summary_line(r.metrics) << "\n";
            }
            write_file(fs::path(sweep_out) / "sweep.csv", table);
        } else if (*gc_cmd) {
            bool ok = true;
            for (const auto& r : nn::run_gradchecks(gc_seed)) {
                char line[160];
                std::snprintf(line, sizeof(line), "%-24s max_rel_error=%.3e tolerance=%.0e checked=%zu %s\n",
                              r.name.c_str(), r.max_rel_error, r.tolerance, r.checked, r.passed() ? "PASS" : "FAIL");
                out << line;
                ok = ok && r.passed();
            }
            return ok ? kOk : kNumericError;
        } else if (*report_cmd) {
            const auto recs = data::load_directory(report.data_dir);
            std::map<std::string, std::vector<data::Recording>> by_subject;
            for (const auto& r : recs) by_subject[r.subject.id].push_back(r);
            std::optional<nn::TrainedModel> model;
            if (!report_model.empty()) model = nn::load_model(report_model);
            const auto cfg = model ? trainer::TrainConfig{} : report.config();

            std::vector<trainer::SubjectRow> rows;
            for (const auto& [id, subject_recs] : by_subject) {
                const auto [window, shift] = resolve_window(report.window, subject_recs, 300, 50);
                auto ds = data::build_preproc_dataset(subject_recs, window, shift);
                if (!report.keep_labels.empty()) ds = data::filter_labels(ds, parse_label_list(report.keep_labels));
                double acc;
                if (model) {
                    acc = trainer::evaluate(*model, ds).accuracy;
                } else {
                    const auto [tr, te] = data::split(ds, report.split.spec(cfg.seed));
                    acc = trainer::train_dlpr(tr, te, cfg).metrics.accuracy;
                }
                rows.push_back({subject_recs.front().subject, acc});
            }
            const std::string table = trainer::per_subject_report(rows);
            if (report_out.empty()) out << table;
            else write_file(report_out, table);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::NumericError ? kNumericError : kDataError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    }
    return kOk;
}

}  // namespace dlpr::cli
