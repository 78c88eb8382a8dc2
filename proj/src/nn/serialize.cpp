#include "dlpr/nn/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "dlpr/error.hpp"

namespace dlpr::nn {
namespace {

constexpr char kMagic[] = "DLPRM1";  // 7 bytes with the terminator
constexpr std::size_t kMagicSize = sizeof(kMagic);

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    return v;
}

void put_f64(std::string& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }

double get_f64(const std::string& in, std::size_t pos) { return std::bit_cast<double>(get_u64(in, pos)); }

[[noreturn]] void corrupt(const std::string& what) { throw Error(ErrorKind::ParseError, "model file: " + what); }

}  // namespace

std::string encode_model(const TrainedModel& model) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : model.net.layers()) layers.push_back(layer->describe());

    const nlohmann::json header = {
        {"format", "DLPRM1"},
        {"spec", model.net.spec().to_json()},
        {"input_length", model.net.spec().input_length},
        {"num_classes", model.net.spec().num_classes},
        {"seed", model.seed},
        {"layers", layers},
        {"normalization", {{"mean", model.normalization.mean}, {"std", model.normalization.stddev}}},
    };
    const std::string text = header.dump();

    std::string out(kMagic, kMagicSize);
    put_u64(out, text.size());
    out += text;
    for (const Tensor* t : model.net.persistent_tensors())
        for (double v : t->values()) put_f64(out, v);
    return out;
}

TrainedModel decode_model(const std::string& bytes) {
    if (bytes.size() < kMagicSize + 8 || std::memcmp(bytes.data(), kMagic, kMagicSize) != 0)
        corrupt("bad magic");
    const std::uint64_t header_len = get_u64(bytes, kMagicSize);
    const std::size_t header_pos = kMagicSize + 8;
    if (header_len > bytes.size() - header_pos) corrupt("truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(header_pos, header_len));
    } catch (const nlohmann::json::exception& e) {
        corrupt(std::string("header is not JSON: ") + e.what());
    }
    if (header.value("format", "") != "DLPRM1") corrupt("unknown format tag");

    try {
        const ModelSpec spec = ModelSpec::from_json(header.at("spec"));
        const auto seed = header.at("seed").get<std::uint64_t>();
        TrainedModel model{Model(spec, seed), {}, seed};
        model.normalization.mean = header.at("normalization").at("mean").get<std::vector<double>>();
        model.normalization.stddev = header.at("normalization").at("std").get<std::vector<double>>();
        if (model.normalization.mean.size() != spec.input_length ||
            model.normalization.stddev.size() != spec.input_length)
            corrupt("normalization width does not match input_length");

        std::size_t pos = header_pos + header_len;
        for (Tensor* t : model.net.persistent_tensors()) {
            if (bytes.size() - pos < 8 * t->size()) corrupt("truncated parameters");
            for (double& v : t->values()) {
                v = get_f64(bytes, pos);
                pos += 8;
            }
        }
        if (pos != bytes.size()) corrupt("trailing bytes after parameters");
        return model;
    } catch (const nlohmann::json::exception& e) {
        corrupt(std::string("header field: ") + e.what());
    }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::ParseError, "cannot write " + path.string());
    const std::string bytes = encode_model(model);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_model(bytes);
}

}  // namespace dlpr::nn
