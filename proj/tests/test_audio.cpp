#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kidvoice/audio.hpp"
#include "oracles.hpp"

using namespace kidvoice;

namespace {

std::vector<std::uint8_t> wav_header_override(std::vector<std::uint8_t> wav, std::size_t offset, std::uint16_t v) {
    wav[offset] = static_cast<std::uint8_t>(v);
    wav[offset + 1] = static_cast<std::uint8_t>(v >> 8);
    return wav;
}

std::vector<double> sine(double hz, int rate, std::size_t n, double amp = 0.5) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2 * std::numbers::pi * hz * static_cast<double>(i) / rate);
    return x;
}

}  // namespace

TEST(DecodeWav, SixteenKilohertzMono) {
    const auto buf = decode_wav(encode_wav(std::vector<double>(16000, 0.25)));
    EXPECT_EQ(buf.samples.size(), 16000u);
    EXPECT_EQ(buf.sample_rate, 16000);
    EXPECT_DOUBLE_EQ(buf.duration_seconds(), 1.0);
    EXPECT_DOUBLE_EQ(buf.samples[0], 8192.0 / 32768.0);
}

TEST(DecodeWav, FortyEightKilohertzIsResampledAndKeepsPitch) {
    const auto buf = decode_wav(encode_wav(sine(440.0, 48000, 48000), 48000));
    ASSERT_EQ(buf.samples.size(), 16000u);
    EXPECT_EQ(buf.sample_rate, 16000);
    // 1 s at 16 kHz: bin spacing is 1 Hz
    EXPECT_EQ(oracle::dominant_dft_bin(buf.samples), 440u);
}

TEST(DecodeWav, CdRateResamplesToWholeSecond) {
    const auto buf = decode_wav(encode_wav(sine(1000.0, 44100, 44100), 44100));
    EXPECT_EQ(buf.samples.size(), 16000u);
}

TEST(DecodeWav, RejectsStereo) {
    auto wav = wav_header_override(encode_wav(std::vector<double>(100)), 22, 2);
    try {
        decode_wav(wav);
        FAIL() << "stereo accepted";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnsupportedFormat);
    }
}

TEST(DecodeWav, RejectsNonPcmAndOddRates) {
    auto float_fmt = wav_header_override(encode_wav(std::vector<double>(100)), 20, 3);
    EXPECT_THROW(decode_wav(float_fmt), Error);
    auto eight_bit = wav_header_override(encode_wav(std::vector<double>(100)), 34, 8);
    EXPECT_THROW(decode_wav(eight_bit), Error);
    try {
        decode_wav(encode_wav(std::vector<double>(100), 22050));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnsupportedFormat);
    }
}

TEST(DecodeWav, CorruptHeaders) {
    const auto good = encode_wav(std::vector<double>(100));
    auto expect_corrupt = [](std::vector<std::uint8_t> bytes) {
        try {
            decode_wav(bytes);
            FAIL() << "accepted corrupt input";
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), Errc::CorruptHeader);
        }
    };
    expect_corrupt({});
    auto bad_magic = good;
    bad_magic[0] = 'X';
    expect_corrupt(bad_magic);
    expect_corrupt(std::vector<std::uint8_t>(good.begin(), good.end() - 10));  // data overruns file
    expect_corrupt(std::vector<std::uint8_t>(good.begin(), good.begin() + 36));  // no data chunk
}

TEST(DecodeWav, Deterministic) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> x(777);
    for (auto& v : x) v = u(rng);
    const auto bytes = encode_wav(x, 44100);
    EXPECT_EQ(decode_wav(bytes).samples, decode_wav(bytes).samples);
}

TEST(PreEmphasize, Examples) {
    EXPECT_EQ(pre_emphasize({{0, 0, 0, 0}}, 0.97).samples, (std::vector<double>{0, 0, 0, 0}));
    const auto impulse = pre_emphasize({{1, 0, 0}}, 0.97).samples;
    EXPECT_DOUBLE_EQ(impulse[0], 1.0);
    EXPECT_DOUBLE_EQ(impulse[1], -0.97);
    EXPECT_DOUBLE_EQ(impulse[2], 0.0);
    const auto dc = pre_emphasize({{1, 1, 1}}, 0.97).samples;
    EXPECT_DOUBLE_EQ(dc[0], 1.0);
    EXPECT_NEAR(dc[1], 0.03, 1e-15);
    EXPECT_NEAR(dc[2], 0.03, 1e-15);
    EXPECT_TRUE(pre_emphasize({}, 0.5).samples.empty());
}

TEST(PreEmphasize, InverseFilterReconstructs) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1, 1), ua(0.0, 0.999);
    for (int trial = 0; trial < 50; ++trial) {
        AudioBuffer x{std::vector<double>(1 + rng() % 2000)};
        for (auto& v : x.samples) v = u(rng);
        const double alpha = ua(rng);
        const auto back = de_emphasize(pre_emphasize(x, alpha), alpha);
        for (std::size_t n = 0; n < x.samples.size(); ++n) ASSERT_NEAR(back.samples[n], x.samples[n], 1e-9);
    }
}

TEST(FrameSignal, CountAndWindow) {
    const auto seq = frame_signal({std::vector<double>(16000, 1.0)}, PreprocessConfig{});
    EXPECT_EQ(seq.n_frames(), 98u);
    EXPECT_EQ(seq.frame_len, 400u);
    EXPECT_EQ(seq.hop, 160u);
    EXPECT_NEAR(seq.frames(0, 0), 0.08, 1e-12);
    EXPECT_NEAR(hamming(0, 400), 0.08, 1e-12);
    EXPECT_NEAR(hamming(399, 400), 0.08, 1e-12);
}

TEST(FrameSignal, ShortInputIsZeroPadded) {
    const auto seq = frame_signal({std::vector<double>(100, 1.0)}, PreprocessConfig{});
    ASSERT_EQ(seq.n_frames(), 1u);
    EXPECT_GT(seq.frames(0, 50), 0.0);
    for (std::size_t n = 100; n < 400; ++n) EXPECT_EQ(seq.frames(0, n), 0.0);
}

TEST(FrameSignal, EmptyAndBadConfig) {
    try {
        frame_signal({}, PreprocessConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptySignal);
    }
    PreprocessConfig odd;
    odd.frame_ms = 25.03;  // 400.48 samples
    EXPECT_THROW(frame_signal({std::vector<double>(1000)}, odd), Error);
    PreprocessConfig inverted;
    inverted.hop_ms = 30.0;
    EXPECT_THROW(frame_signal({std::vector<double>(1000)}, inverted), Error);
}

TEST(FrameSignal, CountFormulaProperty) {
    std::mt19937_64 rng(5);
    const PreprocessConfig cfg;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t len = 400 + rng() % 20000;
        const auto seq = frame_signal({std::vector<double>(len, 0.1)}, cfg);
        ASSERT_EQ(seq.n_frames(), 1 + (len - 400) / 160) << len;
    }
}

TEST(SpectralSubtract, Examples) {
    PreprocessConfig cfg;
    cfg.noise_frames = 1;
    // first frame is the noise estimate
    EXPECT_DOUBLE_EQ(spectral_subtract(Matrix(2, 1, {5, 5}), cfg)(1, 0), 0.5);
    EXPECT_DOUBLE_EQ(spectral_subtract(Matrix(2, 1, {3, 10}), cfg)(1, 0), 7.0);
    const Matrix zero_noise(3, 2, {0, 0, 4, 2, 1, 9});
    EXPECT_EQ(spectral_subtract(zero_noise, cfg), zero_noise);
    cfg.denoise_enabled = false;
    EXPECT_EQ(spectral_subtract(Matrix(2, 1, {3, 10}), cfg), Matrix(2, 1, {3, 10}));
}

TEST(SpectralSubtract, TooFewFrames) {
    try {
        spectral_subtract(Matrix(4, 3), PreprocessConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::TooFewFrames);
    }
}

TEST(SpectralSubtract, FloorAndUpperBoundProperty) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    const PreprocessConfig cfg;
    for (int trial = 0; trial < 100; ++trial) {
        Matrix mag(5 + rng() % 40, 1 + rng() % 20);
        for (auto& v : mag.data()) v = u(rng);
        const auto noise = estimate_noise(mag, cfg.noise_frames);
        const auto out = spectral_subtract(mag, cfg);
        for (std::size_t t = 0; t < mag.rows(); ++t)
            for (std::size_t k = 0; k < mag.cols(); ++k) {
                const double floor = cfg.noise_floor_beta * noise[k];
                ASSERT_GE(out(t, k), floor);
                // the floor may lift a bin above its input only when the input is below the floor
                if (mag(t, k) >= floor) ASSERT_LE(out(t, k), mag(t, k) + 1e-12);
                else ASSERT_DOUBLE_EQ(out(t, k), floor);
            }
    }
}
