#include "multifuser/run_spec.h"

#include <charconv>
#include <sstream>

#include "file_util.h"
#include "multifuser/errors.h"

namespace multifuser {

const std::map<std::string, std::string>& default_settings() {
    static const std::map<std::string, std::string> defaults{
        {"seed", "0"},
        {"model.modalities", "3"},
        {"model.frames", "4"},
        {"model.height", "32"},
        {"model.width", "32"},
        {"model.channels", "3"},
        {"model.patch", "8"},
        {"model.embed_dim", "32"},
        {"model.heads", "4"},
        {"model.layers", "4"},
        {"model.synth_layers", "2"},
        {"model.num_classes", "4"},
        {"model.kernel", "3"},
        {"model.fusion", "parallel"},
        {"data.dir", ""},
        {"data.train_samples", "512"},
        {"data.eval_samples", "256"},
        {"data.noise_std", "0.05"},
        {"data.seed", "1"},
        {"train.epochs", "50"},
        {"train.batch_size", "16"},
        {"train.lr", "0.0001"},
        {"train.weight_decay", "0.01"},
        {"train.beta1", "0.9"},
        {"train.beta2", "0.999"},
        {"train.eps", "1e-08"},
        {"gradcheck.step", "1e-05"},
        {"gradcheck.tolerance", "0.0001"},
        {"ablate.cross", "false"},
    };
    return defaults;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

Settings::Settings() : values_(default_settings()) {}

void Settings::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second = value;
}

void Settings::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

Settings Settings::parse(const std::string& text) {
    Settings s;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string body = trim(line.substr(0, line.find('#')));
        if (body.empty()) continue;
        if (body.find('=') == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        s.apply_override(body);
    }
    return s;
}

Settings Settings::load(const std::filesystem::path& path) {
    try {
        return parse(detail::read_file(path));
    } catch (const LoadError& e) {
        throw ConfigError(e.what());
    }
}

const std::string& Settings::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

std::uint64_t Settings::get_u64(const std::string& key) const {
    const std::string& v = get(key);
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + v + "'");
    }
    return out;
}

std::size_t Settings::get_size(const std::string& key) const { return static_cast<std::size_t>(get_u64(key)); }

double Settings::get_double(const std::string& key) const {
    const std::string& v = get(key);
    try {
        std::size_t used = 0;
        const double out = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
    }
}

bool Settings::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key '" + key + "' expects true/false, got '" + v + "'");
}

std::string Settings::resolved_text() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
    return os.str();
}

ModelConfig Settings::model_config() const {
    ModelConfig c;
    c.modalities = get_size("model.modalities");
    c.frames = get_size("model.frames");
    c.height = get_size("model.height");
    c.width = get_size("model.width");
    c.channels = get_size("model.channels");
    c.patch = get_size("model.patch");
    c.embed_dim = get_size("model.embed_dim");
    c.heads = get_size("model.heads");
    c.layers = get_size("model.layers");
    c.synth_layers = get_size("model.synth_layers");
    c.num_classes = get_size("model.num_classes");
    c.kernel = get_size("model.kernel");
    c.fusion = parse_fusion_strategy(get("model.fusion"));
    c.seed = get_u64("seed");
    c.validate();
    return c;
}

TrainConfig Settings::train_config() const {
    TrainConfig t;
    t.epochs = get_size("train.epochs");
    t.batch_size = get_size("train.batch_size");
    t.learning_rate = get_double("train.lr");
    t.weight_decay = get_double("train.weight_decay");
    t.beta1 = get_double("train.beta1");
    t.beta2 = get_double("train.beta2");
    t.epsilon = get_double("train.eps");
    t.seed = get_u64("seed");
    t.validate();
    return t;
}

DataSpec Settings::train_data_spec() const {
    DataSpec d;
    d.modalities = get_size("model.modalities");
    d.frames = get_size("model.frames");
    d.height = get_size("model.height");
    d.width = get_size("model.width");
    d.channels = get_size("model.channels");
    d.num_classes = get_size("model.num_classes");
    d.samples = get_size("data.train_samples");
    d.noise_std = get_double("data.noise_std");
    d.seed = get_u64("data.seed");
    d.validate();
    return d;
}

DataSpec Settings::eval_data_spec() const {
    DataSpec d = train_data_spec();
    d.samples = get_size("data.eval_samples");
    // disjoint stream from the training samples
    d.seed = d.seed + 0x9E3779B97F4A7C15ULL;
    return d;
}

Settings RunSpec::resolve() const {
    Settings s = config_path.empty() ? Settings() : Settings::load(config_path);
    for (const std::string& o : overrides) s.apply_override(o);
    if (has_seed) s.set("seed", std::to_string(seed));
    return s;
}

}  // namespace multifuser
