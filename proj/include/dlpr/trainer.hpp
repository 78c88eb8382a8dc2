#pragma once

// Training loop, evaluation metrics and reporting for the DLPR network.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dlpr/dataio.hpp"
#include "dlpr/nn/model.hpp"
#include "dlpr/nn/serialize.hpp"

namespace dlpr::trainer {

enum class Arch { Auto, Canonical, Compact };

struct TrainConfig {
    std::size_t batch_size = 100;
    std::size_t epochs = 50;
    std::uint64_t seed = 0;
    nn::AdamConfig adam;
    Arch arch = Arch::Auto;
    std::optional<nn::ModelSpec> spec;  // overrides arch and num_classes when set
    std::size_t num_classes = 0;  // 0: max label in the data + 1
    bool record_curves = true;
    std::string dataset_id;
};

struct Metrics {
    double accuracy = 0.0;
    std::vector<std::vector<std::size_t>> confusion;  // [truth][prediction]
    std::vector<double> recall;                        // NaN-free: classes without samples get 0
    std::size_t total = 0;
    double training_time_sec = 0.0;
    std::vector<double> train_curve;
    std::vector<double> test_curve;
    std::vector<double> loss_curve;
    std::size_t batch_size = 0;
    std::size_t epochs = 0;
};

struct TrainResult {
    nn::TrainedModel model;
    Metrics metrics;
};

double accuracy(std::span<const int> predictions, std::span<const int> truth);

// Confusion matrix, recall and accuracy (= trace / total).
Metrics score(std::span<const int> predictions, std::span<const int> truth, std::size_t num_classes);

nn::ModelSpec choose_spec(Arch arch, std::size_t input_length, std::size_t num_classes);

// Trains on `train`; when `test` is non-empty the per-epoch test curve and the
// final metrics come from it, otherwise from the training set.
TrainResult train_dlpr(const data::WindowedDataset& train, const data::WindowedDataset& test,
                       const TrainConfig& config);

// Inference-mode predictions in chunks of `chunk` rows.
std::vector<int> predict(const nn::TrainedModel& model, const data::WindowedDataset& ds, std::size_t chunk = 256);

// Side-effect free; throws EmptyOutput on an empty set and ConfigError on a
// width or class-count mismatch.
Metrics evaluate(const nn::TrainedModel& model, const data::WindowedDataset& ds, std::size_t chunk = 256);

// One training run per batch size, in the given order.
std::vector<TrainResult> batch_sweep(const data::WindowedDataset& train, const data::WindowedDataset& test,
                                     const TrainConfig& base, std::span<const std::size_t> batch_sizes);

struct SubjectRow {
    data::SubjectMeta subject;
    double accuracy = 0.0;
};

// CSV: subject_id,dash_score,accuracy (empty dash_score when unknown).
std::string per_subject_report(std::span<const SubjectRow> rows);

nlohmann::json metrics_to_json(const Metrics& m, bool include_timing = true);
std::string confusion_csv(const Metrics& m);
std::string curves_csv(const Metrics& m);

// metrics.json, confusion.csv, curves.csv and model.dlprm under dir.
void write_run(const TrainResult& result, const std::filesystem::path& dir);

}  // namespace dlpr::trainer
