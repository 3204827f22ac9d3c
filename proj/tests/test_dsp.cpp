#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <random>

#include "coughlab/common.hpp"
#include "coughlab/dsp.hpp"

using Catch::Approx;
using namespace coughlab;

TEST_CASE("fft matches the direct DFT on random input") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const size_t n = 64;
    std::vector<std::complex<double>> a(n);
    for (auto& x : a) x = {dist(rng), dist(rng)};

    auto fft = a;
    dsp::fft_inplace(fft);
    for (size_t k = 0; k < n; k += 7) {
        std::complex<double> direct{0.0, 0.0};
        for (size_t i = 0; i < n; ++i) {
            const double ang = -2.0 * dsp::kPi * static_cast<double>(k * i) / static_cast<double>(n);
            direct += a[i] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        CHECK(std::abs(fft[k] - direct) < 1e-9);
    }

    dsp::fft_inplace(fft, true);
    for (size_t i = 0; i < n; ++i) CHECK(std::abs(fft[i] - a[i]) < 1e-12);
}

TEST_CASE("fft rejects non power-of-two lengths") {
    std::vector<std::complex<double>> a(12);
    CHECK_THROWS_AS(dsp::fft_inplace(a), InvalidArgument);
}

TEST_CASE("power spectrum of a pure tone peaks in the right bin") {
    const size_t n = 1024;
    const double fs = 12000.0, f0 = 1500.0;
    std::vector<double> frame(n);
    // bin-aligned tone: 1500 Hz = bin 128 exactly at 12 kHz / 1024
    for (size_t i = 0; i < n; ++i) frame[i] = std::sin(2.0 * dsp::kPi * f0 * static_cast<double>(i) / fs);
    auto spec = dsp::power_spectrum_frame(frame, n);
    size_t argmax = 0;
    for (size_t k = 1; k < spec.size(); ++k)
        if (spec[k] > spec[argmax]) argmax = k;
    CHECK(argmax == 128);
}

TEST_CASE("orthonormal DCT-II") {
    SECTION("constant input concentrates in coefficient 0") {
        std::vector<double> x(40, 2.5);
        auto c = dsp::dct2_orthonormal(x, 17);
        CHECK(c[0] == Approx(std::sqrt(40.0) * 2.5));
        for (size_t k = 1; k < c.size(); ++k) CHECK(std::abs(c[k]) < 1e-9);
    }
    SECTION("round trip through all coefficients is exact") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> dist(-3.0, 3.0);
        std::vector<double> x(40);
        for (auto& v : x) v = dist(rng);
        auto all = dsp::dct2_orthonormal(x, x.size());
        auto back = dsp::idct2_orthonormal(all);
        for (size_t i = 0; i < x.size(); ++i) CHECK(back[i] == Approx(x[i]).margin(1e-10));
        // re-projecting reproduces the truncated coefficients
        auto again = dsp::dct2_orthonormal(back, 17);
        for (size_t k = 0; k < 17; ++k) CHECK(again[k] == Approx(all[k]).margin(1e-10));
    }
}

TEST_CASE("mel filterbank spans the spectrum") {
    const auto bank = dsp::mel_filterbank(40, 1024, 12000.0);
    REQUIRE(bank.size() == 40);
    for (const auto& filt : bank) {
        REQUIRE(filt.size() == 513);
        double sum = 0.0;
        for (double w : filt) {
            CHECK(w >= 0.0);
            sum += w;
        }
        CHECK(sum > 0.0);  // no empty filters at this resolution
    }
    CHECK(dsp::hz_to_mel(0.0) == Approx(0.0));
    CHECK(dsp::mel_to_hz(dsp::hz_to_mel(3456.0)) == Approx(3456.0));
}

TEST_CASE("quantile interpolates linearly") {
    std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
    CHECK(quantile(xs, 0.0) == Approx(1.0));
    CHECK(quantile(xs, 1.0) == Approx(4.0));
    CHECK(quantile(xs, 0.5) == Approx(2.5));
    CHECK(quantile(xs, 0.75) == Approx(3.25));
}

TEST_CASE("round_to handles decimal boundary cases") {
    CHECK(round_to(0.145, 2) == Approx(0.15));
    CHECK(round_to(0.085, 2) == Approx(0.09));
    CHECK(round_to(0.144, 2) == Approx(0.14));
    CHECK(round_to(-0.145, 2) == Approx(-0.15));
    CHECK(round_to(1.0, 2) == Approx(1.0));
}
