#include "igd/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace igd {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

using ordered_json = nlohmann::ordered_json;

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ifstream in(path, mode);
    if (!in) throw io_error("cannot open " + path.string() + " for reading");
    return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, mode);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    return out;
}

void flush_or_throw(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw io_error("failed writing " + path.string());
}

template <typename T>
void put(std::ofstream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::ifstream& in, const std::filesystem::path& path) {
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw io_error("truncated file: " + path.string());
    return value;
}

void expect_eof(std::ifstream& in, const std::filesystem::path& path) {
    char extra;
    in.read(&extra, 1);
    if (!in.eof()) throw io_error("trailing bytes in " + path.string());
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
    double x;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, x);
    if (ec != std::errc{} || ptr != end)
        throw io_error("bad number '" + s + "' in " + path.string());
    return x;
}

long parse_long(const std::string& s, const std::filesystem::path& path) {
    long x;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, x);
    if (ec != std::errc{} || ptr != end)
        throw io_error("bad integer '" + s + "' in " + path.string());
    return x;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

constexpr char kInfluenceMagic[8] = {'I', 'G', 'D', 'I', 'N', 'F', 'L', '\0'};
constexpr char kGraphMagic[8] = {'I', 'G', 'D', 'G', 'R', 'P', 'H', '\0'};
constexpr std::uint32_t kContainerVersion = 1;
constexpr int kModelVersion = 1;

} // namespace

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, ptr);
}

Dataset read_dataset(const std::filesystem::path& path, std::optional<Modality> modality,
                     std::optional<int> num_classes) {
    auto in = open_in(path, std::ios::in);
    Dataset out;
    bool modality_fixed = modality.has_value();
    if (modality_fixed) out.modality = *modality;

    std::string line;
    std::size_t lineno = 0;
    int max_label = -1;
    std::optional<int> header_classes;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') {
            // write_dataset emits "# modality=<m> num_classes=<c>"; honor it
            // so round-trips never depend on the content heuristic.
            std::istringstream meta(line);
            std::string word;
            while (meta >> word) {
                if (word.rfind("modality=", 0) == 0 && !modality_fixed) {
                    out.modality = modality_from_string(word.substr(9));
                    modality_fixed = true;
                } else if (word.rfind("num_classes=", 0) == 0) {
                    header_classes = static_cast<int>(parse_long(word.substr(12), path));
                }
            }
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() < 3)
            throw io_error("line " + std::to_string(lineno) + " of " + path.string() +
                           " has fewer than 3 fields");
        Example z;
        z.id = parse_long(fields[0], path);
        z.label = static_cast<int>(parse_long(fields[1], path));
        max_label = std::max(max_label, z.label);

        if (!modality_fixed) {
            const bool spaced = fields.size() == 3 && fields[2].find(' ') != std::string::npos;
            out.modality = (fields.size() == 3 && spaced) ? Modality::tokens : Modality::dense;
            modality_fixed = true;
        }
        if (out.modality == Modality::dense) {
            z.features.reserve(fields.size() - 2);
            for (std::size_t f = 2; f < fields.size(); ++f)
                z.features.push_back(parse_double(fields[f], path));
        } else {
            if (fields.size() != 3)
                throw io_error("token line " + std::to_string(lineno) + " of " + path.string() +
                               " must have exactly 3 comma fields");
            std::istringstream toks(fields[2]);
            std::string tok;
            while (toks >> tok)
                z.tokens.push_back(static_cast<TokenId>(parse_long(tok, path)));
        }
        out.examples.push_back(std::move(z));
    }
    out.num_classes = num_classes ? *num_classes : header_classes.value_or(max_label + 1);
    out.validate();
    return out;
}

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
    auto out = open_out(path, std::ios::out);
    out << "# modality=" << to_string(dataset.modality)
        << " num_classes=" << dataset.num_classes << "\n";
    for (const Example& z : dataset.examples) {
        out << z.id << ',' << z.label << ',';
        if (dataset.modality == Modality::dense) {
            for (std::size_t f = 0; f < z.features.size(); ++f) {
                if (f) out << ',';
                out << format_double(z.features[f]);
            }
        } else {
            for (std::size_t t = 0; t < z.tokens.size(); ++t) {
                if (t) out << ' ';
                out << z.tokens[t];
            }
        }
        out << '\n';
    }
    flush_or_throw(out, path);
}

void write_model(const std::filesystem::path& path, const TrainedModel& model) {
    ordered_json j;
    j["version"] = kModelVersion;
    j["family"] = to_string(model.spec.family);
    j["num_classes"] = model.spec.num_classes;
    j["input_dim"] = model.spec.input_dim;
    j["hidden_dim"] = model.spec.hidden_dim;
    j["vocab_size"] = model.spec.vocab_size;
    j["embed_dim"] = model.spec.embed_dim;
    j["learning_rate"] = model.train_config.learning_rate;
    j["steps"] = model.train_config.steps;
    j["l2_weight"] = model.train_config.l2_weight;
    j["seed"] = model.train_config.seed;
    j["grad_tolerance"] = model.train_config.grad_tolerance;
    j["final_grad_norm"] = model.final_grad_norm;
    // Parameters as hex-encoded IEEE bits: exact round-trip, no decimal noise.
    std::string blob;
    blob.reserve(static_cast<std::size_t>(model.params.size()) * 16);
    static const char* digits = "0123456789abcdef";
    for (Eigen::Index i = 0; i < model.params.size(); ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &model.params[i], sizeof(bits));
        for (int nib = 15; nib >= 0; --nib) blob.push_back(digits[(bits >> (4 * nib)) & 0xF]);
    }
    j["param_count"] = model.params.size();
    j["params_hex"] = blob;

    auto out = open_out(path, std::ios::out);
    out << j.dump(2) << '\n';
    flush_or_throw(out, path);
}

TrainedModel read_model(const std::filesystem::path& path) {
    auto in = open_in(path, std::ios::in);
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw io_error("bad model file " + path.string() + ": " + e.what());
    }
    try {
        if (j.at("version").get<int>() != kModelVersion)
            throw io_error("unsupported model version in " + path.string());
        TrainedModel model;
        model.spec.family = model_family_from_string(j.at("family").get<std::string>());
        model.spec.num_classes = j.at("num_classes").get<int>();
        model.spec.input_dim = j.at("input_dim").get<int>();
        model.spec.hidden_dim = j.at("hidden_dim").get<int>();
        model.spec.vocab_size = j.at("vocab_size").get<int>();
        model.spec.embed_dim = j.at("embed_dim").get<int>();
        model.train_config.learning_rate = j.at("learning_rate").get<double>();
        model.train_config.steps = j.at("steps").get<long>();
        model.train_config.l2_weight = j.at("l2_weight").get<double>();
        model.train_config.seed = j.at("seed").get<std::uint64_t>();
        model.train_config.grad_tolerance = j.at("grad_tolerance").get<double>();
        model.final_grad_norm = j.at("final_grad_norm").get<double>();
        model.spec.validate();

        const auto count = j.at("param_count").get<Eigen::Index>();
        const auto& blob = j.at("params_hex").get_ref<const std::string&>();
        if (count != static_cast<Eigen::Index>(model.spec.param_count()) ||
            blob.size() != static_cast<std::size_t>(count) * 16)
            throw io_error("parameter payload does not match the spec in " + path.string());
        model.params.resize(count);
        for (Eigen::Index i = 0; i < count; ++i) {
            std::uint64_t bits = 0;
            for (int nib = 0; nib < 16; ++nib) {
                const char c = blob[static_cast<std::size_t>(i) * 16 + static_cast<std::size_t>(nib)];
                std::uint64_t v;
                if (c >= '0' && c <= '9') v = static_cast<std::uint64_t>(c - '0');
                else if (c >= 'a' && c <= 'f') v = static_cast<std::uint64_t>(c - 'a' + 10);
                else throw io_error("bad parameter encoding in " + path.string());
                bits = (bits << 4) | v;
            }
            std::memcpy(&model.params[i], &bits, sizeof(bits));
        }
        return model;
    } catch (const ordered_json::exception& e) {
        throw io_error("bad model file " + path.string() + ": " + e.what());
    }
}

void write_influence_matrix(const std::filesystem::path& path, const InfluenceMatrix& m) {
    m.validate();
    auto out = open_out(path, std::ios::binary);
    out.write(kInfluenceMagic, 8);
    put(out, kContainerVersion);
    put(out, static_cast<std::uint64_t>(m.n()));
    put(out, m.damping);
    put(out, static_cast<std::uint32_t>(m.method == IhvpMethod::explicit_solve ? 0 : 1));
    put(out, static_cast<std::uint32_t>(m.abs_scores ? 1 : 0));
    put(out, m.model_hash);
    for (NodeId id : m.ids) put(out, static_cast<std::int64_t>(id));
    for (Eigen::Index i = 0; i < m.scores.rows(); ++i)
        for (Eigen::Index j = 0; j < m.scores.cols(); ++j) put(out, m.scores(i, j));
    flush_or_throw(out, path);
}

InfluenceMatrix read_influence_matrix(const std::filesystem::path& path) {
    auto in = open_in(path, std::ios::binary);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kInfluenceMagic, 8) != 0)
        throw io_error(path.string() + " is not an influence matrix container");
    if (take<std::uint32_t>(in, path) != kContainerVersion)
        throw io_error("unsupported influence container version in " + path.string());
    InfluenceMatrix m;
    const auto n = take<std::uint64_t>(in, path);
    if (n > (1ull << 32)) throw io_error("implausible matrix size in " + path.string());
    m.damping = take<double>(in, path);
    m.method = take<std::uint32_t>(in, path) == 0 ? IhvpMethod::explicit_solve
                                                  : IhvpMethod::conjugate_gradient;
    m.abs_scores = take<std::uint32_t>(in, path) != 0;
    m.model_hash = take<std::uint64_t>(in, path);
    m.ids.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) m.ids.push_back(take<std::int64_t>(in, path));
    m.scores.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < m.scores.rows(); ++i)
        for (Eigen::Index j = 0; j < m.scores.cols(); ++j) m.scores(i, j) = take<double>(in, path);
    expect_eof(in, path);
    m.validate();
    return m;
}

void write_influence_csv(const std::filesystem::path& path, const InfluenceMatrix& m) {
    auto out = open_out(path, std::ios::out);
    out << "source_id,target_id,score\n";
    for (Eigen::Index i = 0; i < m.scores.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.scores.cols(); ++j) {
            if (i == j) continue;
            out << m.ids[static_cast<std::size_t>(i)] << ',' << m.ids[static_cast<std::size_t>(j)]
                << ',' << format_double(m.scores(i, j)) << '\n';
        }
    }
    flush_or_throw(out, path);
}

void write_graph(const std::filesystem::path& path, const InfluenceGraph& g) {
    auto out = open_out(path, std::ios::binary);
    out.write(kGraphMagic, 8);
    put(out, kContainerVersion);
    put(out, static_cast<std::uint64_t>(g.size()));
    for (NodeId id : g.node_ids()) put(out, static_cast<std::int64_t>(id));
    for (double w : g.upper_weights()) put(out, w);
    flush_or_throw(out, path);
}

InfluenceGraph read_graph(const std::filesystem::path& path) {
    auto in = open_in(path, std::ios::binary);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kGraphMagic, 8) != 0)
        throw io_error(path.string() + " is not a graph container");
    if (take<std::uint32_t>(in, path) != kContainerVersion)
        throw io_error("unsupported graph container version in " + path.string());
    const auto n = take<std::uint64_t>(in, path);
    if (n < 2 || n > (1ull << 32)) throw io_error("implausible graph size in " + path.string());
    std::vector<NodeId> ids;
    ids.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) ids.push_back(take<std::int64_t>(in, path));
    std::vector<double> weights(n * (n - 1) / 2);
    for (double& w : weights) {
        w = take<double>(in, path);
        if (!std::isfinite(w)) throw io_error("non-finite edge weight in " + path.string());
    }
    expect_eof(in, path);
    return InfluenceGraph(std::move(ids), std::move(weights));
}

void write_graph_csv(const std::filesystem::path& path, const InfluenceGraph& g) {
    auto out = open_out(path, std::ios::out);
    out << "node_a,node_b,weight\n";
    const auto& ids = g.node_ids();
    for (std::size_t a = 0; a < g.size(); ++a)
        for (std::size_t b = a + 1; b < g.size(); ++b)
            out << ids[a] << ',' << ids[b] << ',' << format_double(g.weight_at(a, b)) << '\n';
    flush_or_throw(out, path);
}

void write_subgraph(const std::filesystem::path& path, const Subgraph& s,
                    const std::string& algorithm, int k, const std::string& objective) {
    ordered_json j;
    j["algorithm"] = algorithm;
    j["k"] = k;
    j["objective"] = objective;
    j["score"] = s.score;
    j["nodes"] = s.nodes;
    auto out = open_out(path, std::ios::out);
    out << j.dump(2) << '\n';
    flush_or_throw(out, path);
}

Subgraph read_subgraph(const std::filesystem::path& path) {
    auto in = open_in(path, std::ios::in);
    ordered_json j;
    try {
        in >> j;
        Subgraph s;
        s.score = j.at("score").get<double>();
        s.nodes = j.at("nodes").get<std::vector<NodeId>>();
        return s;
    } catch (const std::exception& e) {
        throw io_error("bad subgraph file " + path.string() + ": " + e.what());
    }
}

void write_poison_record(const std::filesystem::path& path, const PoisonRecord& record) {
    auto out = open_out(path, std::ios::out);
    out << "id,original_label\n";
    for (NodeId id : record.poisoned_ids)
        out << id << ',' << record.original_labels.at(id) << '\n';
    flush_or_throw(out, path);
}

PoisonRecord read_poison_record(const std::filesystem::path& path) {
    auto in = open_in(path, std::ios::in);
    PoisonRecord record;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || lineno == 1) continue; // header
        const auto fields = split(line, ',');
        if (fields.size() != 2)
            throw io_error("line " + std::to_string(lineno) + " of " + path.string() +
                           " must be id,original_label");
        const NodeId id = parse_long(fields[0], path);
        record.poisoned_ids.push_back(id);
        record.original_labels.emplace(id, static_cast<int>(parse_long(fields[1], path)));
    }
    std::sort(record.poisoned_ids.begin(), record.poisoned_ids.end());
    return record;
}

} // namespace igd
