#include "multifuser/synthetic_data.h"

#include <algorithm>
#include <array>
#include <cstdio>
#include <random>

#include <json.hpp>

#include "binary_io.h"
#include "file_util.h"
#include "multifuser/errors.h"

namespace multifuser {

namespace {

constexpr double kBackground = 0.1;
constexpr double kBright = 0.9;
constexpr double kDim = 0.5;
constexpr std::size_t kAttributes = 4;

struct Blob {
    std::size_t side;
    double level;
    std::ptrdiff_t x0, y0;
    std::ptrdiff_t dx, dy;  // per-frame displacement
};

std::size_t sample_in(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

std::size_t DataSpec::label_bits() const {
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < num_classes) ++bits;
    return bits;
}

void DataSpec::validate() const {
    if (modalities == 0 || frames == 0 || height == 0 || width == 0 || channels == 0) {
        throw ConfigError("dataset extents must be positive");
    }
    if (num_classes < 2 || (num_classes & (num_classes - 1)) != 0) {
        throw ConfigError("num_classes must be a power of two >= 2, got " + std::to_string(num_classes));
    }
    const std::size_t bits = label_bits();
    if (bits > modalities) {
        throw ConfigError("num_classes = 2^" + std::to_string(bits) + " needs at least " + std::to_string(bits) +
                          " modalities, have " + std::to_string(modalities));
    }
    if (bits > kAttributes) throw ConfigError("at most 16 classes are supported");
    if (frames < 2) throw ConfigError("drift patterns need at least 2 frames");
    if (height < 8 || width < 8) throw ConfigError("frames must be at least 8x8 pixels");
    if (noise_std < 0.0) throw ConfigError("noise_std must be non-negative");
}

std::vector<std::size_t> bit_assignment(const DataSpec& spec) {
    const std::size_t bits = spec.label_bits();
    std::vector<std::size_t> out(spec.modalities);
    for (std::size_t m = 0; m < spec.modalities; ++m) out[m] = m < bits ? m : (m - bits) % bits;
    return out;
}

std::vector<SyntheticClip> gen_dataset(const DataSpec& spec) {
    spec.validate();
    const std::size_t bits = spec.label_bits();
    const std::vector<std::size_t> assignment = bit_assignment(spec);
    const std::size_t M = spec.modalities, T = spec.frames, H = spec.height, W = spec.width, C = spec.channels;
    const std::size_t big = std::max<std::size_t>(2, std::min(H, W) / 4);
    const std::size_t small = std::max<std::size_t>(1, big / 2);

    std::vector<SyntheticClip> clips;
    clips.reserve(spec.samples);
    for (std::size_t i = 0; i < spec.samples; ++i) {
        std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                          static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
        std::mt19937_64 rng(seq);
        const std::size_t label = sample_in(rng, 0, spec.num_classes - 1);

        std::vector<double> pixels(M * T * H * W * C, kBackground);
        for (std::size_t m = 0; m < M; ++m) {
            const std::size_t own_bit = assignment[m];
            const double contrast = m < bits ? 1.0 : 0.5;
            // Attribute values: driven by the label for the assigned bit,
            // random for other encoded bits, fixed for unencoded attributes.
            std::array<int, kAttributes> attr{};
            for (std::size_t a = 0; a < kAttributes; ++a) {
                if (a == own_bit) {
                    attr[a] = static_cast<int>((label >> a) & 1U);
                } else if (a < bits) {
                    attr[a] = static_cast<int>(sample_in(rng, 0, 1));
                } else {
                    attr[a] = a == static_cast<std::size_t>(BlobAttribute::kSize) ? 1 : -1;
                }
            }
            Blob blob{};
            blob.side = attr[3] == 0 ? small : big;
            const double level = attr[1] == 0 ? kDim : kBright;
            blob.level = kBackground + contrast * (level - kBackground);
            const std::size_t span_x = W - blob.side, span_y = H - blob.side;
            const std::size_t step_x = std::max<std::size_t>(1, span_x / (T - 1));
            const std::size_t step_y = std::max<std::size_t>(1, span_y / (T - 1));
            auto place = [&](int dir, std::size_t span, std::size_t step, std::ptrdiff_t& start, std::ptrdiff_t& delta) {
                if (dir < 0) {  // static
                    start = static_cast<std::ptrdiff_t>(sample_in(rng, 0, span));
                    delta = 0;
                    return;
                }
                const std::size_t travel = step * (T - 1);
                if (travel > span) throw ConfigError("gen_dataset: too many frames for the frame size");
                delta = dir == 1 ? static_cast<std::ptrdiff_t>(step) : -static_cast<std::ptrdiff_t>(step);
                start = static_cast<std::ptrdiff_t>(dir == 1 ? sample_in(rng, 0, span - travel)
                                                             : sample_in(rng, travel, span));
            };
            place(attr[0], span_x, step_x, blob.x0, blob.dx);
            place(attr[2], span_y, step_y, blob.y0, blob.dy);

            for (std::size_t t = 0; t < T; ++t) {
                const auto x = static_cast<std::size_t>(blob.x0 + blob.dx * static_cast<std::ptrdiff_t>(t));
                const auto y = static_cast<std::size_t>(blob.y0 + blob.dy * static_cast<std::ptrdiff_t>(t));
                for (std::size_t r = y; r < y + blob.side; ++r)
                    for (std::size_t c = x; c < x + blob.side; ++c)
                        for (std::size_t ch = 0; ch < C; ++ch) {
                            pixels[(((m * T + t) * H + r) * W + c) * C + ch] = blob.level;
                        }
            }
        }
        if (spec.noise_std > 0.0) {
            std::normal_distribution<double> noise(0.0, spec.noise_std);
            for (double& v : pixels) v = std::clamp(v + noise(rng), 0.0, 1.0);
        }
        clips.push_back({Tensor::from_data({M, T, H, W, C}, std::move(pixels)), label, assignment});
    }
    return clips;
}

std::vector<SyntheticClip> select_modalities(const std::vector<SyntheticClip>& clips,
                                             const std::vector<std::size_t>& modalities) {
    if (modalities.empty()) throw ConfigError("select_modalities: empty modality subset");
    std::vector<SyntheticClip> out;
    out.reserve(clips.size());
    for (const SyntheticClip& clip : clips) {
        const Shape& s = clip.pixels.shape();
        const std::size_t per = clip.pixels.numel() / s[0];
        Shape shape = s;
        shape[0] = modalities.size();
        std::vector<double> pixels;
        pixels.reserve(per * modalities.size());
        SyntheticClip sel;
        for (std::size_t m : modalities) {
            if (m >= s[0]) throw ConfigError("select_modalities: modality " + std::to_string(m) + " out of range");
            auto src = clip.pixels.data().subspan(m * per, per);
            pixels.insert(pixels.end(), src.begin(), src.end());
            sel.bit_assignment.push_back(clip.bit_assignment.at(m));
        }
        sel.pixels = Tensor::from_data(std::move(shape), std::move(pixels));
        sel.label = clip.label;
        out.push_back(std::move(sel));
    }
    return out;
}

namespace {

std::string sample_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "sample_%06zu.bin", i);
    return buf;
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const DataSpec& spec, const std::vector<SyntheticClip>& clips) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = "multifuser-dataset";
    manifest["version"] = 1;
    manifest["modalities"] = spec.modalities;
    manifest["frames"] = spec.frames;
    manifest["height"] = spec.height;
    manifest["width"] = spec.width;
    manifest["channels"] = spec.channels;
    manifest["num_classes"] = spec.num_classes;
    manifest["samples"] = clips.size();
    manifest["noise_std"] = spec.noise_std;
    manifest["seed"] = spec.seed;
    manifest["bit_assignment"] = clips.empty() ? bit_assignment(spec) : clips.front().bit_assignment;
    detail::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    for (std::size_t i = 0; i < clips.size(); ++i) {
        std::string bytes;
        bytes.reserve(4 + 8 * clips[i].pixels.numel());
        detail::put_u32(bytes, static_cast<std::uint32_t>(clips[i].label));
        for (double v : clips[i].pixels.data()) detail::put_f64(bytes, v);
        detail::write_file(dir / sample_name(i), bytes);
    }
}

std::vector<SyntheticClip> load_dataset(const std::filesystem::path& dir, DataSpec* spec_out) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(detail::read_file(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw LoadError("dataset manifest: " + std::string(e.what()));
    }
    DataSpec spec;
    std::vector<std::size_t> assignment;
    try {
        if (manifest.at("format") != "multifuser-dataset" || manifest.at("version") != 1) {
            throw LoadError("dataset manifest: unsupported format/version");
        }
        spec.modalities = manifest.at("modalities");
        spec.frames = manifest.at("frames");
        spec.height = manifest.at("height");
        spec.width = manifest.at("width");
        spec.channels = manifest.at("channels");
        spec.num_classes = manifest.at("num_classes");
        spec.samples = manifest.at("samples");
        spec.noise_std = manifest.at("noise_std");
        spec.seed = manifest.at("seed");
        assignment = manifest.at("bit_assignment").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw LoadError("dataset manifest: " + std::string(e.what()));
    }
    const Shape shape{spec.modalities, spec.frames, spec.height, spec.width, spec.channels};
    const std::size_t n = shape_numel(shape);
    std::vector<SyntheticClip> clips;
    clips.reserve(spec.samples);
    for (std::size_t i = 0; i < spec.samples; ++i) {
        const std::string bytes = detail::read_file(dir / sample_name(i));
        if (bytes.size() != 4 + 8 * n) throw LoadError("dataset sample " + sample_name(i) + ": wrong size");
        std::vector<double> pixels(n);
        for (std::size_t j = 0; j < n; ++j) pixels[j] = detail::get_f64(bytes.data() + 4 + 8 * j);
        const std::size_t label = detail::get_u32(bytes.data());
        if (label >= spec.num_classes) throw LoadError("dataset sample " + sample_name(i) + ": label out of range");
        clips.push_back({Tensor::from_data(shape, std::move(pixels)), label, assignment});
    }
    if (spec_out) *spec_out = spec;
    return clips;
}

}  // namespace multifuser
