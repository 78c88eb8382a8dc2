#pragma once

// Spectral-moment preprocessing of EMG windows.
//
// Moments are computed in the time domain from successive forward differences:
//   mu0 = ||x||,  mu2 = ||dx||,  mu4 = ||d^2 x||
// and combined into the peak and zero-crossing ratios
//   psi = mu4 / mu2,  phi = mu2 / mu0
// which, scaled by the window power mu0, give the MPP and MZP values fed to the
// network. Ratios whose denominator falls below kRatioGuard evaluate to 0.

#include <complex>
#include <span>
#include <vector>

namespace dlpr::signal {

inline constexpr double kRatioGuard = 1e-12;

struct MomentSet {
    double mu0 = 0.0;
    double mu2 = 0.0;
    double mu4 = 0.0;
    double psi = 0.0;
    double phi = 0.0;
    double mpp = 0.0;
    double mzp = 0.0;
};

struct Spectrum {
    std::vector<std::complex<double>> bins;
    std::vector<double> energy;  // |bin|^2 / T
};

// out[j] = w[j+1] - w[j]; throws InvalidWindow for fewer than 2 samples.
std::vector<double> diff(std::span<const double> w);

// Fills mu0, mu2 and mu4 only. Requires at least 3 finite samples.
MomentSet compute_moments(std::span<const double> w);

// Fills psi, phi, mpp and mzp from the moments already present in m.
MomentSet mpp_mzp(MomentSet m);

// compute_moments followed by mpp_mzp.
MomentSet moment_features(std::span<const double> w);

// One window per channel, all the same length. Returns
// [MPP_1 .. MPP_C, MZP_1 .. MZP_C].
std::vector<double> preprocess_window(std::span<const std::span<const double>> channels);

// Unnormalized forward DFT by direct summation.
Spectrum dft(std::span<const double> w);

}  // namespace dlpr::signal
