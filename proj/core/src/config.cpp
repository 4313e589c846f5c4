#include "igd/pipeline.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>

#include "igd/io.hpp"

namespace igd {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_num(const std::string& key, const std::string& value) {
    T x{};
    const char* begin = value.data();
    const char* end = begin + value.size();
    auto [ptr, ec] = std::from_chars(begin, end, x);
    if (ec != std::errc{} || ptr != end)
        throw config_error("bad value '" + value + "' for " + key);
    return x;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw config_error("bad value '" + value + "' for " + key + " (expected true/false)");
}

std::string overrides_to_string(const std::vector<std::pair<int, double>>& overrides) {
    std::string out;
    for (std::size_t i = 0; i < overrides.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(overrides[i].first) + ':' + format_double(overrides[i].second);
    }
    return out;
}

std::vector<std::pair<int, double>> overrides_from_string(const std::string& s) {
    std::vector<std::pair<int, double>> out;
    if (s.empty()) return out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t semi = s.find(';', start);
        const std::string item =
            semi == std::string::npos ? s.substr(start) : s.substr(start, semi - start);
        const std::size_t colon = item.find(':');
        if (colon == std::string::npos)
            throw config_error("bad feature override '" + item + "' (expected index:value)");
        out.emplace_back(parse_num<int>("attack.feature_overrides", item.substr(0, colon)),
                         parse_num<double>("attack.feature_overrides", item.substr(colon + 1)));
        if (semi == std::string::npos) break;
        start = semi + 1;
    }
    return out;
}

std::string tokens_to_string(const std::vector<TokenId>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(tokens[i]);
    }
    return out;
}

std::vector<TokenId> tokens_from_string(const std::string& s) {
    std::vector<TokenId> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        while (pos < s.size() && s[pos] == ' ') ++pos;
        if (pos >= s.size()) break;
        std::size_t end = s.find(' ', pos);
        if (end == std::string::npos) end = s.size();
        out.push_back(parse_num<TokenId>("attack.trigger_tokens", s.substr(pos, end - pos)));
        pos = end;
    }
    return out;
}

} // namespace

std::string to_string(Extractor e) {
    switch (e) {
    case Extractor::greedy: return "greedy";
    case Extractor::agglomerative: return "agglomerative";
    case Extractor::brute_force: return "brute_force";
    case Extractor::spectral_baseline: return "spectral_baseline";
    }
    return "agglomerative";
}

Extractor extractor_from_string(const std::string& s) {
    if (s == "greedy") return Extractor::greedy;
    if (s == "agglomerative") return Extractor::agglomerative;
    if (s == "brute_force") return Extractor::brute_force;
    if (s == "spectral_baseline") return Extractor::spectral_baseline;
    throw config_error("unknown extractor: " + s);
}

void PipelineConfig::validate() const {
    if (out_dir.empty()) throw config_error("out_dir must not be empty");
    if (data.test_n < 1) throw config_error("test_n must be >= 1");
    if (!(budget_multiplier > 0.0)) throw config_error("budget_multiplier must be positive");
    model.validate();
    train.validate();
    ihvp.validate();
    if (!(attack.epsilon > 0.0) || attack.epsilon >= 1.0)
        throw config_error("attack epsilon must be in (0, 1)");

    const bool dense_data = data.kind == DatasetKind::gaussian_blobs;
    if (dense_data != (model.modality() == Modality::dense))
        throw config_error("model family does not match the dataset kind");
    if (dense_data) {
        if (model.num_classes != data.blobs.num_classes)
            throw config_error("model num_classes does not match the generator");
        if (model.input_dim != data.blobs.dim)
            throw config_error("model input_dim does not match the generator");
        if (attack.kind != AttackKind::feature_trigger)
            throw config_error("dense data needs a feature_trigger attack");
    } else {
        if (model.num_classes != data.tokens.num_classes)
            throw config_error("model num_classes does not match the generator");
        if (model.vocab_size != data.tokens.vocab_size)
            throw config_error("model vocab_size does not match the generator");
        if (attack.kind != AttackKind::token_insert)
            throw config_error("token data needs a token_insert attack");
    }
    if (attack.target_label < 0 || attack.target_label >= model.num_classes)
        throw config_error("attack target label out of range");
}

PipelineConfig PipelineConfig::from_keys(const std::map<std::string, std::string>& keys) {
    PipelineConfig cfg;
    for (const auto& [key, value] : keys) {
        if (key == "seed") cfg.seed = parse_num<std::uint64_t>(key, value);
        else if (key == "out_dir") cfg.out_dir = value;
        else if (key == "data.kind") cfg.data.kind = dataset_kind_from_string(value);
        else if (key == "data.test_n") cfg.data.test_n = parse_num<long>(key, value);
        else if (key == "data.blobs.n") cfg.data.blobs.n = parse_num<long>(key, value);
        else if (key == "data.blobs.num_classes") cfg.data.blobs.num_classes = parse_num<int>(key, value);
        else if (key == "data.blobs.dim") cfg.data.blobs.dim = parse_num<int>(key, value);
        else if (key == "data.blobs.separation") cfg.data.blobs.separation = parse_num<double>(key, value);
        else if (key == "data.blobs.noise_sigma") cfg.data.blobs.noise_sigma = parse_num<double>(key, value);
        else if (key == "data.tokens.n") cfg.data.tokens.n = parse_num<long>(key, value);
        else if (key == "data.tokens.num_classes") cfg.data.tokens.num_classes = parse_num<int>(key, value);
        else if (key == "data.tokens.vocab_size") cfg.data.tokens.vocab_size = parse_num<int>(key, value);
        else if (key == "data.tokens.seq_min") cfg.data.tokens.seq_min = parse_num<int>(key, value);
        else if (key == "data.tokens.seq_max") cfg.data.tokens.seq_max = parse_num<int>(key, value);
        else if (key == "data.tokens.noise") cfg.data.tokens.noise = parse_num<double>(key, value);
        else if (key == "data.tokens.reserved_tail") cfg.data.tokens.reserved_tail = parse_num<int>(key, value);
        else if (key == "model.family") cfg.model.family = model_family_from_string(value);
        else if (key == "model.num_classes") cfg.model.num_classes = parse_num<int>(key, value);
        else if (key == "model.input_dim") cfg.model.input_dim = parse_num<int>(key, value);
        else if (key == "model.hidden_dim") cfg.model.hidden_dim = parse_num<int>(key, value);
        else if (key == "model.vocab_size") cfg.model.vocab_size = parse_num<int>(key, value);
        else if (key == "model.embed_dim") cfg.model.embed_dim = parse_num<int>(key, value);
        else if (key == "train.learning_rate") cfg.train.learning_rate = parse_num<double>(key, value);
        else if (key == "train.steps") cfg.train.steps = parse_num<long>(key, value);
        else if (key == "train.l2_weight") cfg.train.l2_weight = parse_num<double>(key, value);
        else if (key == "train.grad_tolerance") cfg.train.grad_tolerance = parse_num<double>(key, value);
        else if (key == "attack.kind") cfg.attack.kind = attack_kind_from_string(value);
        else if (key == "attack.target_label") cfg.attack.target_label = parse_num<int>(key, value);
        else if (key == "attack.epsilon") cfg.attack.epsilon = parse_num<double>(key, value);
        else if (key == "attack.feature_overrides") cfg.attack.feature_overrides = overrides_from_string(value);
        else if (key == "attack.trigger_tokens") cfg.attack.trigger_tokens = tokens_from_string(value);
        else if (key == "ihvp.method") cfg.ihvp.method = ihvp_method_from_string(value);
        else if (key == "ihvp.damping") cfg.ihvp.damping = parse_num<double>(key, value);
        else if (key == "ihvp.cg_tolerance") cfg.ihvp.cg_tolerance = parse_num<double>(key, value);
        else if (key == "ihvp.cg_max_iters") cfg.ihvp.cg_max_iters = parse_num<long>(key, value);
        else if (key == "ihvp.explicit_cap") cfg.ihvp.explicit_cap = parse_num<int>(key, value);
        else if (key == "abs_scores") cfg.abs_scores = parse_bool(key, value);
        else if (key == "extractor") cfg.extractor = extractor_from_string(value);
        else if (key == "objective") cfg.objective = merge_objective_from_string(value);
        else if (key == "budget_multiplier") cfg.budget_multiplier = parse_num<double>(key, value);
        else if (key == "threads") cfg.threads = parse_num<unsigned>(key, value);
        else if (key == "emit_csv") cfg.emit_csv = parse_bool(key, value);
        else throw config_error("unknown config key: " + key);
    }
    return cfg;
}

std::map<std::string, std::string> PipelineConfig::to_keys() const {
    std::map<std::string, std::string> keys;
    keys["seed"] = std::to_string(seed);
    keys["out_dir"] = out_dir.string();
    keys["data.kind"] = to_string(data.kind);
    keys["data.test_n"] = std::to_string(data.test_n);
    keys["data.blobs.n"] = std::to_string(data.blobs.n);
    keys["data.blobs.num_classes"] = std::to_string(data.blobs.num_classes);
    keys["data.blobs.dim"] = std::to_string(data.blobs.dim);
    keys["data.blobs.separation"] = format_double(data.blobs.separation);
    keys["data.blobs.noise_sigma"] = format_double(data.blobs.noise_sigma);
    keys["data.tokens.n"] = std::to_string(data.tokens.n);
    keys["data.tokens.num_classes"] = std::to_string(data.tokens.num_classes);
    keys["data.tokens.vocab_size"] = std::to_string(data.tokens.vocab_size);
    keys["data.tokens.seq_min"] = std::to_string(data.tokens.seq_min);
    keys["data.tokens.seq_max"] = std::to_string(data.tokens.seq_max);
    keys["data.tokens.noise"] = format_double(data.tokens.noise);
    keys["data.tokens.reserved_tail"] = std::to_string(data.tokens.reserved_tail);
    keys["model.family"] = to_string(model.family);
    keys["model.num_classes"] = std::to_string(model.num_classes);
    keys["model.input_dim"] = std::to_string(model.input_dim);
    keys["model.hidden_dim"] = std::to_string(model.hidden_dim);
    keys["model.vocab_size"] = std::to_string(model.vocab_size);
    keys["model.embed_dim"] = std::to_string(model.embed_dim);
    keys["train.learning_rate"] = format_double(train.learning_rate);
    keys["train.steps"] = std::to_string(train.steps);
    keys["train.l2_weight"] = format_double(train.l2_weight);
    keys["train.grad_tolerance"] = format_double(train.grad_tolerance);
    keys["attack.kind"] = to_string(attack.kind);
    keys["attack.target_label"] = std::to_string(attack.target_label);
    keys["attack.epsilon"] = format_double(attack.epsilon);
    keys["attack.feature_overrides"] = overrides_to_string(attack.feature_overrides);
    keys["attack.trigger_tokens"] = tokens_to_string(attack.trigger_tokens);
    keys["ihvp.method"] = to_string(ihvp.method);
    keys["ihvp.damping"] = format_double(ihvp.damping);
    keys["ihvp.cg_tolerance"] = format_double(ihvp.cg_tolerance);
    keys["ihvp.cg_max_iters"] = std::to_string(ihvp.cg_max_iters);
    keys["ihvp.explicit_cap"] = std::to_string(ihvp.explicit_cap);
    keys["abs_scores"] = abs_scores ? "true" : "false";
    keys["extractor"] = to_string(extractor);
    keys["objective"] = to_string(objective);
    keys["budget_multiplier"] = format_double(budget_multiplier);
    keys["threads"] = std::to_string(threads);
    keys["emit_csv"] = emit_csv ? "true" : "false";
    return keys;
}

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& path,
                                         const std::map<std::string, std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file " + path.string());
    std::map<std::string, std::string> keys;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(lineno) + " of " + path.string() +
                               " is not a key = value pair");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw config_error("empty key on line " + std::to_string(lineno) + " of " +
                               path.string());
        if (!keys.emplace(key, value).second)
            throw config_error("duplicate key '" + key + "' in " + path.string());
    }
    for (const auto& [key, value] : overrides) keys[key] = value;
    return from_keys(keys);
}

std::filesystem::path resolve_output_path(const std::filesystem::path& p) {
    if (p.is_absolute()) return p;
    const char* root = std::getenv("IGD_OUTPUT_ROOT");
    if (root == nullptr || *root == '\0') return p;
    return std::filesystem::path(root) / p;
}

} // namespace igd
