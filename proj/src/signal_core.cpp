#include "dlpr/signal_core.hpp"

#include <cmath>
#include <numbers>

#include "dlpr/error.hpp"

namespace dlpr::signal {
namespace {

double sum_squares(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

double guarded_ratio(double num, double den) { return den < kRatioGuard ? 0.0 : num / den; }

}  // namespace

std::vector<double> diff(std::span<const double> w) {
    if (w.size() < 2) throw Error(ErrorKind::InvalidWindow, "difference needs at least 2 samples");
    std::vector<double> out(w.size() - 1);
    for (std::size_t j = 0; j + 1 < w.size(); ++j) out[j] = w[j + 1] - w[j];
    return out;
}

MomentSet compute_moments(std::span<const double> w) {
    if (w.size() < 3)
        throw Error(ErrorKind::InvalidWindow,
                    "moments need at least 3 samples, got " + std::to_string(w.size()));
    for (std::size_t j = 0; j < w.size(); ++j)
        if (!std::isfinite(w[j]))
            throw Error(ErrorKind::NonFiniteInput, "sample " + std::to_string(j) + " is not finite");

    const auto d1 = diff(w);
    const auto d2 = diff(d1);
    MomentSet m;
    m.mu0 = std::sqrt(sum_squares(w));
    m.mu2 = std::sqrt(sum_squares(d1));
    m.mu4 = std::sqrt(sum_squares(d2));
    return m;
}

MomentSet mpp_mzp(MomentSet m) {
    m.psi = guarded_ratio(m.mu4, m.mu2);
    m.phi = guarded_ratio(m.mu2, m.mu0);
    m.mpp = m.mu0 * m.psi;
    m.mzp = m.mu0 * m.phi;
    return m;
}

MomentSet moment_features(std::span<const double> w) { return mpp_mzp(compute_moments(w)); }

std::vector<double> preprocess_window(std::span<const std::span<const double>> channels) {
    if (channels.empty()) throw Error(ErrorKind::ChannelMismatch, "no channels");
    const std::size_t c = channels.size();
    const std::size_t t = channels[0].size();
    std::vector<double> out(2 * c);
    for (std::size_t ch = 0; ch < c; ++ch) {
        if (channels[ch].size() != t)
            throw Error(ErrorKind::ChannelMismatch,
                        "channel " + std::to_string(ch) + " has " + std::to_string(channels[ch].size()) +
                            " samples, expected " + std::to_string(t));
        const MomentSet m = moment_features(channels[ch]);
        out[ch] = m.mpp;
        out[c + ch] = m.mzp;
    }
    return out;
}

Spectrum dft(std::span<const double> w) {
    const std::size_t n = w.size();
    Spectrum s;
    s.bins.resize(n);
    s.energy.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t j = 0; j < n; ++j) {
            // Reduce k*j mod n first so the phase stays exact for long windows.
            const double angle = -2.0 * std::numbers::pi * static_cast<double>((k * j) % n) / static_cast<double>(n);
            acc += w[j] * std::polar(1.0, angle);
        }
        s.bins[k] = acc;
        s.energy[k] = std::norm(acc) / static_cast<double>(n);
    }
    return s;
}

}  // namespace dlpr::signal
