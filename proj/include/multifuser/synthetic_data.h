#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "multifuser/tensor.h"

namespace multifuser {

struct DataSpec {
    std::size_t modalities = 3;
    std::size_t frames = 4;
    std::size_t height = 32;
    std::size_t width = 32;
    std::size_t channels = 3;
    std::size_t num_classes = 4;
    std::size_t samples = 512;
    double noise_std = 0.05;
    std::uint64_t seed = 0;

    // Throws ConfigError unless num_classes is a power of two 2^b with
    // 1 <= b <= min(M, 4) and the frame geometry supports the patterns.
    void validate() const;
    std::size_t label_bits() const;
};

// Attribute rendered by a modality. Bit k of the label drives attribute k.
enum class BlobAttribute { kHorizontalDrift = 0, kBrightness = 1, kVerticalDrift = 2, kSize = 3 };

struct SyntheticClip {
    Tensor pixels;  // [M, T, H, W, C], values in [0, 1]
    std::size_t label = 0;
    // bit_assignment[m] = label bit carried by modality m
    std::vector<std::size_t> bit_assignment;
};

// Modality m < b carries bit m at full contrast; later modalities repeat bit
// (m - b) mod b at half contrast.
std::vector<std::size_t> bit_assignment(const DataSpec& spec);

// One drifting square blob per modality and frame. The attribute tied to the
// modality's assigned bit follows the label; attributes tied to other encoded
// bits are drawn at random. Sample i depends only on (seed, i).
std::vector<SyntheticClip> gen_dataset(const DataSpec& spec);

// Keeps only the listed modalities, in the given order.
std::vector<SyntheticClip> select_modalities(const std::vector<SyntheticClip>& clips,
                                             const std::vector<std::size_t>& modalities);

// Directory layout: manifest.json plus sample_NNNNNN.bin, each a
// little-endian uint32 label followed by float64 pixels in [M,T,H,W,C] order.
void save_dataset(const std::filesystem::path& dir, const DataSpec& spec, const std::vector<SyntheticClip>& clips);
std::vector<SyntheticClip> load_dataset(const std::filesystem::path& dir, DataSpec* spec = nullptr);

}  // namespace multifuser
