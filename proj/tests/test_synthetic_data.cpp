#include <gtest/gtest.h>

#include <filesystem>

#include "decoders.h"
#include "multifuser/errors.h"
#include "multifuser/synthetic_data.h"
#include "test_util.h"

using namespace multifuser;
using namespace multifuser::testing;

namespace {

DataSpec clean_spec(std::size_t samples = 256) {
    DataSpec s;
    s.samples = samples;
    s.noise_std = 0.0;
    s.seed = 3;
    return s;
}

}  // namespace

TEST(SyntheticDataTest, BitAssignmentDefault) {
    EXPECT_EQ(bit_assignment(DataSpec{}), (std::vector<std::size_t>{0, 1, 0}));
    DataSpec s;
    s.modalities = 4;
    s.num_classes = 8;
    EXPECT_EQ(bit_assignment(s), (std::vector<std::size_t>{0, 1, 2, 0}));
}

TEST(SyntheticDataTest, DecoderRecoversEveryAssignedBit) {
    DataSpec spec = clean_spec();
    for (const SyntheticClip& clip : gen_dataset(spec)) {
        ASSERT_EQ(clip.pixels.shape(), (Shape{3, 4, 32, 32, 3}));
        for (std::size_t m = 0; m < 3; ++m) {
            const std::size_t bit = clip.bit_assignment[m];
            const double contrast = m < 2 ? 1.0 : 0.5;
            const int decoded = decode_attribute(clip.pixels, m, static_cast<BlobAttribute>(bit), contrast);
            ASSERT_EQ(decoded, static_cast<int>((clip.label >> bit) & 1U)) << "modality " << m;
        }
    }
}

TEST(SyntheticDataTest, DecoderRecoversFourBitsAcrossFourModalities) {
    DataSpec spec = clean_spec(64);
    spec.modalities = 4;
    spec.num_classes = 16;
    for (const SyntheticClip& clip : gen_dataset(spec)) {
        for (std::size_t m = 0; m < 4; ++m) {
            const int decoded = decode_attribute(clip.pixels, m, static_cast<BlobAttribute>(m), 1.0);
            ASSERT_EQ(decoded, static_cast<int>((clip.label >> m) & 1U)) << "modality " << m;
        }
    }
}

TEST(SyntheticDataTest, OtherModalitiesCarryNoInformationAboutABit) {
    DataSpec spec = clean_spec(1024);
    auto clips = gen_dataset(spec);
    // Brightness of modality 0 vs bit 1 and drift of modality 1 vs bit 0.
    std::size_t hit_bright = 0, hit_drift = 0;
    for (const SyntheticClip& clip : clips) {
        hit_bright += decode_attribute(clip.pixels, 0, BlobAttribute::kBrightness, 1.0) == int((clip.label >> 1) & 1U);
        hit_drift += decode_attribute(clip.pixels, 1, BlobAttribute::kHorizontalDrift, 1.0) == int(clip.label & 1U);
    }
    // Chance is 512 of 1024; 4.5 binomial standard deviations is 72.
    EXPECT_NEAR(double(hit_bright), 512.0, 72.0);
    EXPECT_NEAR(double(hit_drift), 512.0, 72.0);
}

TEST(SyntheticDataTest, LabelsAreRoughlyUniform) {
    DataSpec spec = clean_spec(2000);
    std::vector<std::size_t> counts(4, 0);
    for (const SyntheticClip& clip : gen_dataset(spec)) ++counts.at(clip.label);
    for (std::size_t c : counts) EXPECT_NEAR(double(c), 500.0, 90.0);
}

TEST(SyntheticDataTest, PixelsStayInUnitRangeUnderNoise) {
    DataSpec spec = clean_spec(16);
    spec.noise_std = 0.5;
    for (const SyntheticClip& clip : gen_dataset(spec))
        for (double v : clip.pixels.data()) ASSERT_TRUE(v >= 0.0 && v <= 1.0);
}

TEST(SyntheticDataTest, SameSeedIsBitwiseIdenticalAndSeedMatters) {
    DataSpec spec = clean_spec(8);
    spec.noise_std = 0.05;
    auto a = gen_dataset(spec), b = gen_dataset(spec);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_TRUE(bitwise_equal(a[i].pixels, b[i].pixels));
        EXPECT_EQ(a[i].label, b[i].label);
    }
    spec.seed = 4;
    auto c = gen_dataset(spec);
    EXPECT_FALSE(bitwise_equal(a[0].pixels, c[0].pixels));
}

TEST(SyntheticDataTest, SampleDependsOnlyOnSeedAndIndex) {
    DataSpec small = clean_spec(4), large = clean_spec(12);
    auto a = gen_dataset(small), b = gen_dataset(large);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_TRUE(bitwise_equal(a[i].pixels, b[i].pixels));
}

TEST(SyntheticDataTest, InvalidSpecsAreConfigErrors) {
    DataSpec s = clean_spec(4);
    s.num_classes = 3;
    EXPECT_THROW(gen_dataset(s), ConfigError);
    s = clean_spec(4);
    s.modalities = 1;
    EXPECT_THROW(gen_dataset(s), ConfigError);
    s = clean_spec(4);
    s.frames = 1;
    EXPECT_THROW(gen_dataset(s), ConfigError);
    s = clean_spec(4);
    s.frames = 40;
    EXPECT_THROW(gen_dataset(s), ConfigError);
}

TEST(SyntheticDataTest, SelectModalitiesKeepsOrderAndBits) {
    auto clips = gen_dataset(clean_spec(2));
    auto sel = select_modalities(clips, {2, 0});
    ASSERT_EQ(sel[0].pixels.extent(0), 2u);
    EXPECT_EQ(sel[0].bit_assignment, (std::vector<std::size_t>{0, 0}));
    const std::size_t per = clips[0].pixels.numel() / 3;
    for (std::size_t i = 0; i < per; ++i) {
        ASSERT_EQ(sel[0].pixels.data()[i], clips[0].pixels.data()[2 * per + i]);
        ASSERT_EQ(sel[0].pixels.data()[per + i], clips[0].pixels.data()[i]);
    }
    EXPECT_THROW(select_modalities(clips, {}), ConfigError);
    EXPECT_THROW(select_modalities(clips, {3}), ConfigError);
}

TEST(SyntheticDataTest, SaveLoadRoundTrip) {
    DataSpec spec = clean_spec(3);
    spec.noise_std = 0.05;
    auto clips = gen_dataset(spec);
    auto dir = std::filesystem::temp_directory_path() / "multifuser_test_dataset";
    std::filesystem::remove_all(dir);
    save_dataset(dir, spec, clips);
    DataSpec loaded_spec;
    auto loaded = load_dataset(dir, &loaded_spec);
    ASSERT_EQ(loaded.size(), 3u);
    EXPECT_EQ(loaded_spec.seed, spec.seed);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_TRUE(bitwise_equal(loaded[i].pixels, clips[i].pixels));
        EXPECT_EQ(loaded[i].label, clips[i].label);
        EXPECT_EQ(loaded[i].bit_assignment, clips[i].bit_assignment);
    }
    std::filesystem::remove(dir / "sample_000001.bin");
    EXPECT_THROW(load_dataset(dir), LoadError);
    std::filesystem::remove_all(dir);
}
