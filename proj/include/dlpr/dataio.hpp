#pragma once

// Recordings, windowing and train/test partitioning.
//
// On-disk format: one CSV per recording with header `ch1,...,chC,label,repetition`
// and a sidecar of `key=value` lines (`sampling_rate`, `subject_id`, `amputee`,
// optional `dash_score`, `remaining_forearm_pct`, `phantom_intensity`).
// The sidecar of `X.csv` is `X.meta.txt`, falling back to `meta.txt` in the
// same directory.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dlpr::data {

struct SubjectMeta {
    std::string id;
    bool amputee = false;
    std::optional<double> dash_score;  // [0, 100]
    std::optional<double> remaining_forearm_pct;
    std::optional<int> phantom_intensity;  // 0..5
};

struct Recording {
    std::vector<std::vector<double>> channels;
    double sampling_rate = 0.0;
    std::vector<int> labels;       // per sample
    std::vector<int> repetitions;  // per sample
    SubjectMeta subject;

    std::size_t channel_count() const { return channels.size(); }
    std::size_t length() const { return channels.empty() ? 0 : channels.front().size(); }

    // Throws ParseError/ConfigError when the invariants do not hold.
    void validate() const;
};

struct SegmentView {
    std::size_t start = 0;
    std::vector<std::span<const double>> channels;
};

// Window start offsets: floor((n - window) / shift) + 1 of them.
std::vector<std::size_t> segment_offsets(std::size_t n, std::size_t window, std::size_t shift);

// Aligned multichannel windows over rec; trailing partial windows are dropped.
// The views borrow from rec.
std::vector<SegmentView> segment(const Recording& rec, std::size_t window, std::size_t shift);

// Most frequent label, ties to the lowest label.
int majority_label(std::span<const int> labels);

// Floor conversion of a duration to a sample count.
std::size_t ms_to_samples(double sampling_rate, double ms);

struct Provenance {
    std::size_t recording = 0;
    std::size_t start = 0;
};

struct WindowedDataset {
    std::vector<std::vector<double>> inputs;
    std::vector<int> labels;
    std::vector<std::string> subjects;
    std::vector<int> repetitions;
    std::vector<Provenance> provenance;

    std::size_t size() const { return inputs.size(); }
    bool empty() const { return inputs.empty(); }
    std::size_t width() const { return inputs.empty() ? 0 : inputs.front().size(); }
    int num_classes() const;  // max label + 1

    WindowedDataset subset(std::span<const std::size_t> indices) const;
    void append(const WindowedDataset& other);
};

// MPP/MZP rows for every window of every recording.
WindowedDataset build_preproc_dataset(std::span<const Recording> recs, std::size_t window, std::size_t shift);

// Keeps only windows whose label is in keep.
WindowedDataset filter_labels(const WindowedDataset& ds, std::span<const int> keep);

struct SplitSpec {
    double train_fraction = 0.6;
    std::uint64_t seed = 0;
    bool stratified = true;
    bool by_repetition = false;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

SplitIndices split_indices(const WindowedDataset& ds, const SplitSpec& spec);
std::pair<WindowedDataset, WindowedDataset> split(const WindowedDataset& ds, const SplitSpec& spec);

// Per-column z-score with training statistics; zero-variance columns get std 1.
struct ZScore {
    std::vector<double> mean;
    std::vector<double> stddev;

    static ZScore fit(std::span<const std::vector<double>> rows);
    std::vector<double> apply(std::span<const double> row) const;
    void apply_inplace(std::vector<std::vector<double>>& rows) const;
};

SubjectMeta read_meta(const std::filesystem::path& meta_path, double& sampling_rate);
void write_meta(const std::filesystem::path& meta_path, const SubjectMeta& meta, double sampling_rate);

Recording load_csv(const std::filesystem::path& path, const std::filesystem::path& meta_path);
void save_csv(const Recording& rec, const std::filesystem::path& path, const std::filesystem::path& meta_path);

std::filesystem::path sidecar_for(const std::filesystem::path& csv_path);

// Every *.csv in dir (sorted by file name) with its sidecar.
std::vector<Recording> load_directory(const std::filesystem::path& dir);

struct SynthConfig {
    int classes = 5;
    int channels = 4;
    double sampling_rate = 2000.0;
    std::uint64_t seed = 0;
    int windows_per_class = 100;
    int window = 300;  // used to size each class segment
    int shift = 50;
    double envelope_ratio = 25.0;  // loudest / quietest class envelope
    std::string subject_id = "synth";
};

// One recording per class. Each channel is low-passed Gaussian noise scaled by
// a class/channel envelope level and a slow modulation; both the levels and the
// low-pass corner differ per class, so classes separate on power and on the
// moment ratios. Deterministic per seed.
std::vector<Recording> synth_dataset(const SynthConfig& cfg);

// Writes rec_XXX.csv + rec_XXX.meta.txt for each recording.
void save_directory(std::span<const Recording> recs, const std::filesystem::path& dir);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace dlpr::data
