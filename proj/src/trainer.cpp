#include "dlpr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "dlpr/error.hpp"
#include "dlpr/rng.hpp"

namespace dlpr::trainer {
namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::ParseError, "cannot write " + path.string());
    out << text;
}

std::vector<std::vector<double>> normalized_rows(const data::ZScore& z, std::span<const std::vector<double>> rows) {
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(z.apply(r));
    return out;
}

// Shuffling draws from a stream separate from weight initialization.
constexpr std::uint64_t kShuffleStream = 0x5bd1e995ULL;

}  // namespace

double accuracy(std::span<const int> predictions, std::span<const int> truth) {
    if (predictions.size() != truth.size()) throw Error(ErrorKind::ShapeError, "prediction/truth length mismatch");
    if (truth.empty()) throw Error(ErrorKind::EmptyOutput, "accuracy of an empty set is undefined");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += predictions[i] == truth[i];
    return static_cast<double>(correct) / static_cast<double>(truth.size());
}

Metrics score(std::span<const int> predictions, std::span<const int> truth, std::size_t num_classes) {
    Metrics m;
    m.accuracy = accuracy(predictions, truth);
    m.total = truth.size();
    m.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto t = static_cast<std::size_t>(truth[i]);
        const auto p = static_cast<std::size_t>(predictions[i]);
        if (truth[i] < 0 || t >= num_classes || predictions[i] < 0 || p >= num_classes)
            throw Error(ErrorKind::ConfigError, "label outside [0, " + std::to_string(num_classes) + ")");
        ++m.confusion[t][p];
    }
    m.recall.assign(num_classes, 0.0);
    for (std::size_t c = 0; c < num_classes; ++c) {
        const std::size_t row = std::accumulate(m.confusion[c].begin(), m.confusion[c].end(), std::size_t{0});
        if (row) m.recall[c] = static_cast<double>(m.confusion[c][c]) / static_cast<double>(row);
    }
    return m;
}

nn::ModelSpec choose_spec(Arch arch, std::size_t input_length, std::size_t num_classes) {
    nn::ModelSpec spec;
    switch (arch) {
        case Arch::Canonical: spec = nn::ModelSpec::canonical(input_length, num_classes); break;
        case Arch::Compact: spec = nn::ModelSpec::compact(input_length, num_classes); break;
        case Arch::Auto: spec = nn::ModelSpec::for_input(input_length, num_classes); break;
    }
    spec.length_chain();
    return spec;
}

TrainResult train_dlpr(const data::WindowedDataset& train, const data::WindowedDataset& test,
                       const TrainConfig& config) {
    if (train.empty()) throw Error(ErrorKind::EmptyOutput, "empty training set");
    if (config.batch_size < 2) throw Error(ErrorKind::ConfigError, "batch size must be at least 2");
    if (config.epochs < 1) throw Error(ErrorKind::ConfigError, "epochs must be at least 1");
    if (train.size() < 2) throw Error(ErrorKind::BatchTooSmall, "need at least 2 training windows");
    if (!test.empty() && test.width() != train.width())
        throw Error(ErrorKind::ConfigError, "train and test widths differ");

    std::size_t num_classes = config.num_classes;
    if (num_classes == 0)
        num_classes = static_cast<std::size_t>(std::max(train.num_classes(), test.num_classes()));
    if (config.spec) num_classes = config.spec->num_classes;
    if (num_classes < 2) throw Error(ErrorKind::ConfigError, "need at least 2 classes");
    if (static_cast<std::size_t>(std::max(train.num_classes(), test.num_classes())) > num_classes)
        throw Error(ErrorKind::ConfigError, "data labels exceed the configured class count");

    nn::ModelSpec spec = config.spec ? *config.spec : choose_spec(config.arch, train.width(), num_classes);
    if (spec.input_length != train.width())
        throw Error(ErrorKind::ConfigError, "model input length " + std::to_string(spec.input_length) +
                                                " != data width " + std::to_string(train.width()));
    spec.length_chain();
    TrainResult result{nn::TrainedModel{nn::Model(spec, config.seed), data::ZScore::fit(train.inputs), config.seed},
                       {}};
    nn::Model& net = result.model.net;
    const auto x_train = normalized_rows(result.model.normalization, train.inputs);

    nn::Adam adam(config.adam);
    const auto params = net.parameters();
    Rng shuffle_rng(config.seed ^ kShuffleStream);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    Metrics& metrics = result.metrics;
    metrics.batch_size = config.batch_size;
    metrics.epochs = config.epochs;
    const std::size_t batch = std::min(config.batch_size, train.size());
    const bool have_test = !test.empty();

    std::chrono::steady_clock::duration elapsed{};
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        shuffle_rng.shuffle(std::span(order));
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            if (end - start < 2) break;  // batch normalization needs two samples
            rows.clear();
            labels.clear();
            for (std::size_t i = start; i < end; ++i) {
                rows.push_back(x_train[order[i]]);
                labels.push_back(train.labels[order[i]]);
            }
            const nn::Tensor probs = nn::softmax(net.forward(nn::stack_rows(rows)));
            const double loss = nn::cross_entropy(probs, labels);
            if (!std::isfinite(loss) || !probs.all_finite())
                throw Error(ErrorKind::NumericError, "non-finite loss at epoch " + std::to_string(epoch + 1) +
                                                         ", batch " + std::to_string(batches + 1));
            net.backward(nn::softmax_cross_entropy_grad(probs, labels));
            adam.step(params);
            loss_sum += loss;
            ++batches;
        }
        elapsed += std::chrono::steady_clock::now() - t0;
        metrics.loss_curve.push_back(batches ? loss_sum / static_cast<double>(batches) : 0.0);

        if (config.record_curves) {
            metrics.train_curve.push_back(evaluate(result.model, train).accuracy);
            if (have_test) metrics.test_curve.push_back(evaluate(result.model, test).accuracy);
        }
    }
    metrics.training_time_sec = std::chrono::duration<double>(elapsed).count();

    const Metrics final_metrics = evaluate(result.model, have_test ? test : train);
    metrics.accuracy = final_metrics.accuracy;
    metrics.confusion = final_metrics.confusion;
    metrics.recall = final_metrics.recall;
    metrics.total = final_metrics.total;
    return result;
}

std::vector<int> predict(const nn::TrainedModel& model, const data::WindowedDataset& ds, std::size_t chunk) {
    if (ds.empty()) throw Error(ErrorKind::EmptyOutput, "empty evaluation set");
    if (ds.width() != model.net.spec().input_length)
        throw Error(ErrorKind::ConfigError, "data width " + std::to_string(ds.width()) + " != model input length " +
                                                std::to_string(model.net.spec().input_length));
    chunk = std::max<std::size_t>(chunk, 1);
    std::vector<int> out;
    out.reserve(ds.size());
    for (std::size_t start = 0; start < ds.size(); start += chunk) {
        const std::size_t end = std::min(ds.size(), start + chunk);
        const auto rows = normalized_rows(model.normalization,
                                          std::span(ds.inputs).subspan(start, end - start));
        const auto p = model.net.predict(nn::stack_rows(rows));
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

Metrics evaluate(const nn::TrainedModel& model, const data::WindowedDataset& ds, std::size_t chunk) {
    if (ds.empty()) throw Error(ErrorKind::EmptyOutput, "empty evaluation set");
    const std::size_t k = model.net.spec().num_classes;
    if (static_cast<std::size_t>(ds.num_classes()) > k)
        throw Error(ErrorKind::ConfigError, "data has label " + std::to_string(ds.num_classes() - 1) +
                                                " but the model has " + std::to_string(k) + " classes");
    return score(predict(model, ds, chunk), ds.labels, k);
}

std::vector<TrainResult> batch_sweep(const data::WindowedDataset& train, const data::WindowedDataset& test,
                                     const TrainConfig& base, std::span<const std::size_t> batch_sizes) {
    std::vector<TrainResult> out;
    out.reserve(batch_sizes.size());
    for (std::size_t b : batch_sizes) {
        TrainConfig cfg = base;
        cfg.batch_size = b;
        out.push_back(train_dlpr(train, test, cfg));
    }
    return out;
}

std::string per_subject_report(std::span<const SubjectRow> rows) {
    std::string out = "subject_id,dash_score,accuracy\n";
    for (const auto& r : rows) {
        out += r.subject.id;
        out += ',';
        if (r.subject.dash_score) out += data::format_double(*r.subject.dash_score);
        out += ',';
        out += data::format_double(r.accuracy);
        out += '\n';
    }
    return out;
}

nlohmann::json metrics_to_json(const Metrics& m, bool include_timing) {
    nlohmann::json j = {
        {"accuracy", m.accuracy},
        {"total", m.total},
        {"confusion", m.confusion},
        {"recall", m.recall},
        {"batch_size", m.batch_size},
        {"epochs", m.epochs},
        {"curves", {{"train_accuracy", m.train_curve}, {"test_accuracy", m.test_curve}, {"loss", m.loss_curve}}},
    };
    if (include_timing) j["training_time_sec"] = m.training_time_sec;
    return j;
}

std::string confusion_csv(const Metrics& m) {
    std::string out = "truth";
    for (std::size_t c = 0; c < m.confusion.size(); ++c) out += ",pred_" + std::to_string(c);
    out += '\n';
    for (std::size_t t = 0; t < m.confusion.size(); ++t) {
        out += std::to_string(t);
        for (std::size_t v : m.confusion[t]) out += "," + std::to_string(v);
        out += '\n';
    }
    return out;
}

std::string curves_csv(const Metrics& m) {
    std::string out = "epoch,loss,train_accuracy,test_accuracy\n";
    for (std::size_t e = 0; e < m.loss_curve.size(); ++e) {
        out += std::to_string(e + 1) + "," + data::format_double(m.loss_curve[e]) + ",";
        if (e < m.train_curve.size()) out += data::format_double(m.train_curve[e]);
        out += ",";
        if (e < m.test_curve.size()) out += data::format_double(m.test_curve[e]);
        out += '\n';
    }
    return out;
}

void write_run(const TrainResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text(dir / "metrics.json", metrics_to_json(result.metrics).dump(2) + "\n");
    write_text(dir / "confusion.csv", confusion_csv(result.metrics));
    write_text(dir / "curves.csv", curves_csv(result.metrics));
    nn::save_model(result.model, dir / "model.dlprm");
}

}  // namespace dlpr::trainer
