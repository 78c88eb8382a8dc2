#include "dlpr/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "dlpr/error.hpp"
#include "dlpr/rng.hpp"
#include "dlpr/signal_core.hpp"

namespace dlpr::data {
namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end && !text.empty();
}

[[noreturn]] void parse_fail(const fs::path& path, std::size_t line, const std::string& what) {
    throw Error(ErrorKind::ParseError, path.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

void Recording::validate() const {
    if (channels.empty()) throw Error(ErrorKind::ParseError, "recording has no channels");
    if (!(sampling_rate > 0.0) || !std::isfinite(sampling_rate))
        throw Error(ErrorKind::ConfigError, "sampling_rate must be positive");
    const std::size_t n = channels.front().size();
    for (std::size_t c = 0; c < channels.size(); ++c) {
        if (channels[c].size() != n)
            throw Error(ErrorKind::ChannelMismatch, "channel " + std::to_string(c + 1) + " length differs");
        for (std::size_t j = 0; j < n; ++j)
            if (!std::isfinite(channels[c][j]))
                throw Error(ErrorKind::NonFiniteInput,
                            "channel " + std::to_string(c + 1) + " sample " + std::to_string(j) + " not finite");
    }
    if (labels.size() != n || repetitions.size() != n)
        throw Error(ErrorKind::ChannelMismatch, "label/repetition columns differ in length from channels");
    if (subject.dash_score && (*subject.dash_score < 0.0 || *subject.dash_score > 100.0))
        throw Error(ErrorKind::ConfigError, "dash_score outside [0, 100]");
}

std::vector<std::size_t> segment_offsets(std::size_t n, std::size_t window, std::size_t shift) {
    if (shift < 1) throw Error(ErrorKind::ConfigError, "shift must be at least 1 sample");
    if (window < 1) throw Error(ErrorKind::ConfigError, "window must be at least 1 sample");
    if (window > n)
        throw Error(ErrorKind::EmptyOutput,
                    "window of " + std::to_string(window) + " exceeds recording of " + std::to_string(n));
    const std::size_t count = (n - window) / shift + 1;
    std::vector<std::size_t> offsets(count);
    for (std::size_t i = 0; i < count; ++i) offsets[i] = i * shift;
    return offsets;
}

std::vector<SegmentView> segment(const Recording& rec, std::size_t window, std::size_t shift) {
    std::vector<SegmentView> out;
    for (std::size_t start : segment_offsets(rec.length(), window, shift)) {
        SegmentView v;
        v.start = start;
        v.channels.reserve(rec.channel_count());
        for (const auto& ch : rec.channels) v.channels.emplace_back(ch.data() + start, window);
        out.push_back(std::move(v));
    }
    return out;
}

int majority_label(std::span<const int> labels) {
    if (labels.empty()) throw Error(ErrorKind::EmptyOutput, "no labels in window");
    std::map<int, std::size_t> counts;
    for (int l : labels) ++counts[l];
    int best = counts.begin()->first;
    std::size_t best_count = 0;
    for (const auto& [label, count] : counts) {
        if (count > best_count) {
            best = label;
            best_count = count;
        }
    }
    return best;
}

std::size_t ms_to_samples(double sampling_rate, double ms) {
    if (!(sampling_rate > 0.0) || !(ms >= 0.0)) throw Error(ErrorKind::ConfigError, "bad rate or duration");
    return static_cast<std::size_t>(std::floor(sampling_rate * ms / 1000.0));
}

int WindowedDataset::num_classes() const {
    if (labels.empty()) return 0;
    return *std::max_element(labels.begin(), labels.end()) + 1;
}

WindowedDataset WindowedDataset::subset(std::span<const std::size_t> indices) const {
    WindowedDataset out;
    out.inputs.reserve(indices.size());
    for (std::size_t i : indices) {
        out.inputs.push_back(inputs.at(i));
        out.labels.push_back(labels.at(i));
        out.subjects.push_back(subjects.at(i));
        out.repetitions.push_back(repetitions.at(i));
        out.provenance.push_back(provenance.at(i));
    }
    return out;
}

void WindowedDataset::append(const WindowedDataset& other) {
    inputs.insert(inputs.end(), other.inputs.begin(), other.inputs.end());
    labels.insert(labels.end(), other.labels.begin(), other.labels.end());
    subjects.insert(subjects.end(), other.subjects.begin(), other.subjects.end());
    repetitions.insert(repetitions.end(), other.repetitions.begin(), other.repetitions.end());
    provenance.insert(provenance.end(), other.provenance.begin(), other.provenance.end());
}

WindowedDataset build_preproc_dataset(std::span<const Recording> recs, std::size_t window, std::size_t shift) {
    WindowedDataset ds;
    for (std::size_t r = 0; r < recs.size(); ++r) {
        const Recording& rec = recs[r];
        for (const SegmentView& seg : segment(rec, window, shift)) {
            ds.inputs.push_back(signal::preprocess_window(seg.channels));
            ds.labels.push_back(majority_label(std::span(rec.labels).subspan(seg.start, window)));
            ds.repetitions.push_back(majority_label(std::span(rec.repetitions).subspan(seg.start, window)));
            ds.subjects.push_back(rec.subject.id);
            ds.provenance.push_back({r, seg.start});
        }
    }
    return ds;
}

WindowedDataset filter_labels(const WindowedDataset& ds, std::span<const int> keep) {
    const std::set<int> allowed(keep.begin(), keep.end());
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (allowed.contains(ds.labels[i])) idx.push_back(i);
    return ds.subset(idx);
}

namespace {

std::size_t train_count(std::size_t n, double fraction) {
    auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    return std::min(k, n);
}

}  // namespace

SplitIndices split_indices(const WindowedDataset& ds, const SplitSpec& spec) {
    if (ds.empty()) throw Error(ErrorKind::EmptyOutput, "cannot split an empty dataset");
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw Error(ErrorKind::ConfigError, "train_fraction must lie in (0, 1)");

    Rng rng(spec.seed);
    SplitIndices out;

    if (spec.by_repetition) {
        std::vector<int> reps(ds.repetitions.begin(), ds.repetitions.end());
        std::sort(reps.begin(), reps.end());
        reps.erase(std::unique(reps.begin(), reps.end()), reps.end());
        if (reps.size() < 2) throw Error(ErrorKind::StratifyError, "repetition split needs at least 2 repetitions");
        rng.shuffle(std::span(reps));
        const std::size_t k = std::clamp<std::size_t>(train_count(reps.size(), spec.train_fraction), 1, reps.size() - 1);
        const std::set<int> train_reps(reps.begin(), reps.begin() + static_cast<std::ptrdiff_t>(k));
        for (std::size_t i = 0; i < ds.size(); ++i)
            (train_reps.contains(ds.repetitions[i]) ? out.train : out.test).push_back(i);
        return out;
    }

    if (spec.stratified) {
        std::map<int, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);
        for (auto& [label, idx] : by_class) {
            if (idx.size() < 2)
                throw Error(ErrorKind::StratifyError,
                            "class " + std::to_string(label) + " has fewer than 2 windows");
            rng.shuffle(std::span(idx));
            const std::size_t k = std::clamp<std::size_t>(train_count(idx.size(), spec.train_fraction), 1, idx.size() - 1);
            out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
            out.test.insert(out.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());
        }
    } else {
        std::vector<std::size_t> idx(ds.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        rng.shuffle(std::span(idx));
        const std::size_t k = train_count(idx.size(), spec.train_fraction);
        out.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
        out.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

std::pair<WindowedDataset, WindowedDataset> split(const WindowedDataset& ds, const SplitSpec& spec) {
    const SplitIndices idx = split_indices(ds, spec);
    return {ds.subset(idx.train), ds.subset(idx.test)};
}

ZScore ZScore::fit(std::span<const std::vector<double>> rows) {
    if (rows.empty()) throw Error(ErrorKind::EmptyOutput, "cannot fit normalization on no rows");
    const std::size_t d = rows.front().size();
    ZScore z;
    z.mean.assign(d, 0.0);
    z.stddev.assign(d, 0.0);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < d; ++j) z.mean[j] += r[j];
    for (auto& m : z.mean) m /= static_cast<double>(rows.size());
    for (const auto& r : rows)
        for (std::size_t j = 0; j < d; ++j) z.stddev[j] += (r[j] - z.mean[j]) * (r[j] - z.mean[j]);
    for (auto& s : z.stddev) {
        s = std::sqrt(s / static_cast<double>(rows.size()));
        if (s < 1e-12) s = 1.0;
    }
    return z;
}

std::vector<double> ZScore::apply(std::span<const double> row) const {
    if (row.size() != mean.size())
        throw Error(ErrorKind::ShapeError, "row width " + std::to_string(row.size()) + " != normalization width " +
                                               std::to_string(mean.size()));
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean[j]) / stddev[j];
    return out;
}

void ZScore::apply_inplace(std::vector<std::vector<double>>& rows) const {
    for (auto& r : rows) r = apply(r);
}

SubjectMeta read_meta(const fs::path& meta_path, double& sampling_rate) {
    std::ifstream in(meta_path);
    if (!in) throw Error(ErrorKind::ParseError, "cannot open metadata " + meta_path.string());
    SubjectMeta meta;
    std::optional<double> rate;
    bool have_subject = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) parse_fail(meta_path, lineno, "expected key=value");
        const std::string_view key = trim(text.substr(0, eq));
        const std::string_view value = trim(text.substr(eq + 1));
        if (key == "sampling_rate") {
            double v;
            if (!parse_number(value, v) || !(v > 0.0)) parse_fail(meta_path, lineno, "bad sampling_rate");
            rate = v;
        } else if (key == "subject_id") {
            meta.id = std::string(value);
            have_subject = !meta.id.empty();
        } else if (key == "amputee") {
            if (value == "1" || value == "true") meta.amputee = true;
            else if (value == "0" || value == "false") meta.amputee = false;
            else parse_fail(meta_path, lineno, "amputee must be 0/1/true/false");
        } else if (key == "dash_score") {
            double v;
            if (!parse_number(value, v) || v < 0.0 || v > 100.0) parse_fail(meta_path, lineno, "bad dash_score");
            meta.dash_score = v;
        } else if (key == "remaining_forearm_pct") {
            double v;
            if (!parse_number(value, v)) parse_fail(meta_path, lineno, "bad remaining_forearm_pct");
            meta.remaining_forearm_pct = v;
        } else if (key == "phantom_intensity") {
            int v;
            if (!parse_number(value, v) || v < 0 || v > 5) parse_fail(meta_path, lineno, "bad phantom_intensity");
            meta.phantom_intensity = v;
        }
        // Other keys (converter provenance and the like) are ignored.
    }
    if (!rate) throw Error(ErrorKind::ParseError, meta_path.string() + ": missing sampling_rate");
    if (!have_subject) throw Error(ErrorKind::ParseError, meta_path.string() + ": missing subject_id");
    sampling_rate = *rate;
    return meta;
}

void write_meta(const fs::path& meta_path, const SubjectMeta& meta, double sampling_rate) {
    std::ofstream out(meta_path, std::ios::binary);
    if (!out) throw Error(ErrorKind::ParseError, "cannot write " + meta_path.string());
    out << "sampling_rate=" << format_double(sampling_rate) << '\n';
    out << "subject_id=" << meta.id << '\n';
    out << "amputee=" << (meta.amputee ? 1 : 0) << '\n';
    if (meta.dash_score) out << "dash_score=" << format_double(*meta.dash_score) << '\n';
    if (meta.remaining_forearm_pct) out << "remaining_forearm_pct=" << format_double(*meta.remaining_forearm_pct) << '\n';
    if (meta.phantom_intensity) out << "phantom_intensity=" << *meta.phantom_intensity << '\n';
}

Recording load_csv(const fs::path& path, const fs::path& meta_path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path.string());

    Recording rec;
    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) parse_fail(path, 1, "empty file");

    const auto header = split_fields(trim(line));
    if (header.size() < 3) parse_fail(path, 1, "expected columns ch1..chC,label,repetition");
    const std::size_t c = header.size() - 2;
    for (std::size_t i = 0; i < c; ++i)
        if (header[i] != "ch" + std::to_string(i + 1))
            parse_fail(path, 1, "column " + std::to_string(i + 1) + " should be ch" + std::to_string(i + 1));
    if (header[c] != "label") parse_fail(path, 1, "missing label column");
    if (header[c + 1] != "repetition") parse_fail(path, 1, "missing repetition column");

    rec.channels.resize(c);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view text = trim(line);
        if (text.empty()) continue;
        const auto fields = split_fields(text);
        if (fields.size() != c + 2)
            parse_fail(path, lineno, "expected " + std::to_string(c + 2) + " fields, got " + std::to_string(fields.size()));
        for (std::size_t i = 0; i < c; ++i) {
            double v;
            if (!parse_number(fields[i], v))
                parse_fail(path, lineno, "ch" + std::to_string(i + 1) + " is not a number");
            if (!std::isfinite(v)) parse_fail(path, lineno, "ch" + std::to_string(i + 1) + " is not finite");
            rec.channels[i].push_back(v);
        }
        int label, rep;
        if (!parse_number(fields[c], label) || label < 0) parse_fail(path, lineno, "bad label");
        if (!parse_number(fields[c + 1], rep)) parse_fail(path, lineno, "bad repetition");
        rec.labels.push_back(label);
        rec.repetitions.push_back(rep);
    }
    if (rec.labels.empty()) parse_fail(path, lineno, "no data rows");

    rec.subject = read_meta(meta_path, rec.sampling_rate);
    rec.validate();
    return rec;
}

void save_csv(const Recording& rec, const fs::path& path, const fs::path& meta_path) {
    rec.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::ParseError, "cannot write " + path.string());
    const std::size_t c = rec.channel_count();
    for (std::size_t i = 0; i < c; ++i) out << "ch" << i + 1 << ',';
    out << "label,repetition\n";
    std::string row;
    for (std::size_t j = 0; j < rec.length(); ++j) {
        row.clear();
        for (std::size_t i = 0; i < c; ++i) {
            row += format_double(rec.channels[i][j]);
            row += ',';
        }
        row += std::to_string(rec.labels[j]);
        row += ',';
        row += std::to_string(rec.repetitions[j]);
        row += '\n';
        out << row;
    }
    write_meta(meta_path, rec.subject, rec.sampling_rate);
}

fs::path sidecar_for(const fs::path& csv_path) {
    fs::path specific = csv_path;
    specific.replace_extension(".meta.txt");
    if (fs::exists(specific)) return specific;
    fs::path shared = csv_path.parent_path() / "meta.txt";
    if (fs::exists(shared)) return shared;
    throw Error(ErrorKind::ParseError, "no metadata sidecar for " + csv_path.string());
}

std::vector<Recording> load_directory(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error(ErrorKind::ParseError, dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(ErrorKind::ParseError, "no .csv recordings in " + dir.string());
    std::vector<Recording> recs;
    recs.reserve(files.size());
    for (const auto& f : files) recs.push_back(load_csv(f, sidecar_for(f)));
    return recs;
}

void save_directory(std::span<const Recording> recs, const fs::path& dir) {
    fs::create_directories(dir);
    for (std::size_t r = 0; r < recs.size(); ++r) {
        char stem[32];
        std::snprintf(stem, sizeof(stem), "rec_%03zu", r);
        save_csv(recs[r], dir / (std::string(stem) + ".csv"), dir / (std::string(stem) + ".meta.txt"));
    }
}

std::vector<Recording> synth_dataset(const SynthConfig& cfg) {
    if (cfg.classes < 2) throw Error(ErrorKind::ConfigError, "synthetic data needs at least 2 classes");
    if (cfg.channels < 1) throw Error(ErrorKind::ConfigError, "synthetic data needs at least 1 channel");
    if (cfg.windows_per_class < 1 || cfg.window < 3 || cfg.shift < 1)
        throw Error(ErrorKind::ConfigError, "bad synthetic window sizing");
    if (!(cfg.envelope_ratio >= 1.0)) throw Error(ErrorKind::ConfigError, "envelope_ratio must be >= 1");
    if (!(cfg.sampling_rate > 0.0)) throw Error(ErrorKind::ConfigError, "sampling_rate must be positive");

    const auto k = static_cast<std::size_t>(cfg.classes);
    const auto c = static_cast<std::size_t>(cfg.channels);
    const std::size_t n = static_cast<std::size_t>(cfg.window) +
                          static_cast<std::size_t>(cfg.windows_per_class - 1) * static_cast<std::size_t>(cfg.shift);

    // Geometric envelope levels; class `cls` uses level (cls + ch) mod K on channel ch.
    std::vector<double> levels(k);
    for (std::size_t i = 0; i < k; ++i)
        levels[i] = 0.1 * std::pow(cfg.envelope_ratio, static_cast<double>(i) / static_cast<double>(k - 1));

    Rng rng(cfg.seed);
    std::vector<Recording> recs;
    recs.reserve(k);
    for (std::size_t cls = 0; cls < k; ++cls) {
        Recording rec;
        rec.sampling_rate = cfg.sampling_rate;
        rec.subject.id = cfg.subject_id;
        rec.labels.assign(n, static_cast<int>(cls));
        rec.repetitions.assign(n, 1);
        // AR(1) pole: heavier smoothing for low class ids.
        const double pole = 0.9 - 0.7 * static_cast<double>(cls) / static_cast<double>(k - 1);
        const double gain = std::sqrt(1.0 - pole * pole);
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double level = levels[(cls + ch) % k];
            const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            std::vector<double> x(n);
            double state = rng.normal();
            for (std::size_t j = 0; j < n; ++j) {
                state = pole * state + gain * rng.normal();
                const double t = static_cast<double>(j) / cfg.sampling_rate;
                const double envelope = level * (1.0 + 0.15 * std::sin(2.0 * std::numbers::pi * 0.5 * t + phase));
                x[j] = envelope * state;
            }
            rec.channels.push_back(std::move(x));
        }
        recs.push_back(std::move(rec));
    }
    return recs;
}

}  // namespace dlpr::data
