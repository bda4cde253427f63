#include "specden/io.hpp"

#include "specden/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace specden::io {

namespace {

using nlohmann::json;

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("cannot open file: " + path);
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidInputError("cannot write file: " + path);
    return out;
}

// strtod, not std::stod: stod throws out_of_range on subnormals, which occur
// legitimately in Gaussian density tails.
double parse_double(const std::string& tok, const std::string& path) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (tok.empty() || end != begin + tok.size() || !std::isfinite(v)) {
        throw InvalidInputError("parse error in " + path + ": bad number '" + tok + "'");
    }
    return v;
}

std::vector<double> parse_row(const std::string& line, std::size_t expected,
                              const std::string& path) {
    std::istringstream ss(line);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) row.push_back(parse_double(tok, path));
    if (row.size() != expected) {
        throw InvalidInputError("parse error in " + path + ": expected " +
                                std::to_string(expected) + " values, got " +
                                std::to_string(row.size()));
    }
    return row;
}

nn::MlpConfig config_from_json(const json& j) {
    nn::MlpConfig cfg;
    cfg.input_dim = j.at("d").get<int>();
    cfg.hidden = j.at("h").get<int>();
    cfg.classes = j.at("K").get<int>();
    cfg.label_smoothing = j.at("label_smoothing").get<double>();
    std::string act = j.at("activation").get<std::string>();
    if (act == "tanh") {
        cfg.activation = nn::Activation::Tanh;
    } else if (act == "relu") {
        cfg.activation = nn::Activation::Relu;
    } else {
        throw InvalidInputError("checkpoint: unknown activation '" + act + "'");
    }
    return cfg;
}

json config_to_json(const nn::MlpConfig& cfg) {
    return json{{"d", cfg.input_dim},
                {"h", cfg.hidden},
                {"K", cfg.classes},
                {"activation", cfg.activation == nn::Activation::Tanh ? "tanh" : "relu"},
                {"label_smoothing", cfg.label_smoothing}};
}

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) {
        throw InvalidInputError("idx file truncated: " + path);
    }
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

} // namespace

linalg::DenseSymMatrix read_dense_matrix(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw InvalidInputError("parse error in " + path + ": empty file");
    int n = 0;
    try {
        n = std::stoi(line);
    } catch (const std::exception&) {
        throw InvalidInputError("parse error in " + path + ": bad dimension '" + line + "'");
    }
    if (n < 1) throw InvalidInputError("parse error in " + path + ": dimension must be >= 1");
    std::vector<double> entries;
    entries.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        if (!std::getline(in, line)) {
            throw InvalidInputError("parse error in " + path + ": expected " + std::to_string(n) +
                                    " rows");
        }
        auto row = parse_row(line, n, path);
        entries.insert(entries.end(), row.begin(), row.end());
    }
    return linalg::DenseSymMatrix(n, std::move(entries));
}

void write_dense_matrix(const std::string& path, const linalg::DenseSymMatrix& a) {
    auto out = open_out(path);
    out << a.n << "\n";
    for (int i = 0; i < a.n; ++i) {
        for (int j = 0; j < a.n; ++j) out << (j ? " " : "") << format_double(a(i, j));
        out << "\n";
    }
}

std::vector<double> read_eigenvalues(const std::string& path) {
    auto in = open_in(path);
    std::vector<double> eigs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        eigs.push_back(parse_double(line, path));
    }
    if (eigs.empty()) throw InvalidInputError("parse error in " + path + ": no eigenvalues");
    return eigs;
}

void write_eigenvalues(const std::string& path, std::span<const double> eigenvalues) {
    auto out = open_out(path);
    for (double e : eigenvalues) out << format_double(e) << "\n";
}

linop::GradientSet read_gradient_set(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw InvalidInputError("parse error in " + path + ": empty file");
    std::istringstream header(line);
    long count = 0, n = 0;
    if (!(header >> count >> n) || count < 1 || n < 1) {
        throw InvalidInputError("parse error in " + path + ": bad `N n` header");
    }
    std::vector<std::vector<double>> grads;
    grads.reserve(count);
    for (long i = 0; i < count; ++i) {
        if (!std::getline(in, line)) {
            throw InvalidInputError("parse error in " + path + ": expected " +
                                    std::to_string(count) + " gradient rows");
        }
        grads.push_back(parse_row(line, n, path));
    }
    return linop::GradientSet(static_cast<std::size_t>(n), std::move(grads));
}

void write_gradient_set(const std::string& path, const linop::GradientSet& grads) {
    auto out = open_out(path);
    out << grads.count() << " " << grads.n << "\n";
    for (const auto& g : grads.gradients) {
        for (std::size_t j = 0; j < g.size(); ++j) out << (j ? " " : "") << format_double(g[j]);
        out << "\n";
    }
}

void write_density_csv(const std::string& path, const slq::SpectralDensityEstimate& est) {
    auto out = open_out(path);
    out << "t,density\n";
    for (std::size_t i = 0; i < est.grid.size(); ++i) {
        out << format_double(est.grid[i]) << "," << format_double(est.values[i]) << "\n";
    }
}

slq::SpectralDensityEstimate read_density_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line != "t,density") {
        throw InvalidInputError("parse error in " + path + ": expected `t,density` header");
    }
    slq::SpectralDensityEstimate est;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw InvalidInputError("parse error in " + path + ": bad row '" + line + "'");
        }
        est.grid.push_back(parse_double(line.substr(0, comma), path));
        est.values.push_back(parse_double(line.substr(comma + 1), path));
    }
    if (est.grid.empty()) throw InvalidInputError("parse error in " + path + ": no rows");
    return est;
}

void write_density_metadata(const std::string& path, const slq::SpectralDensityEstimate& est) {
    json j{{"n", est.n},
           {"k", est.k},
           {"m", est.m},
           {"sigma2", est.sigma2},
           {"seeds", est.seeds},
           {"breakdown_steps", est.breakdown_steps},
           {"runtime_seconds", est.runtime_seconds},
           {"method", est.method}};
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

void write_checkpoint(const std::string& path, const nn::Checkpoint& ckpt,
                      const nn::MlpConfig& cfg) {
    json j{{"step", ckpt.step},
           {"train_loss", ckpt.train_loss},
           {"config", config_to_json(cfg)},
           {"params", ckpt.params}};
    auto out = open_out(path);
    out << j.dump() << "\n";
}

std::pair<nn::Checkpoint, nn::MlpConfig> read_checkpoint(const std::string& path) {
    auto in = open_in(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InvalidInputError("parse error in " + path + ": " + e.what());
    }
    try {
        nn::Checkpoint ckpt;
        ckpt.step = j.at("step").get<long>();
        ckpt.train_loss = j.at("train_loss").get<double>();
        ckpt.params = j.at("params").get<std::vector<double>>();
        nn::MlpConfig cfg = config_from_json(j.at("config"));
        if (ckpt.params.size() != static_cast<std::size_t>(cfg.param_count())) {
            throw InvalidInputError("checkpoint " + path + ": parameter count mismatch");
        }
        return {std::move(ckpt), cfg};
    } catch (const json::exception& e) {
        throw InvalidInputError("parse error in " + path + ": " + e.what());
    }
}

void write_dataset(const std::string& path, const nn::Dataset& data) {
    auto out = open_out(path);
    out << data.size() << " " << data.input_dim << " " << data.classes << " " << data.batch_size
        << "\n";
    for (int e = 0; e < data.size(); ++e) {
        out << data.ys[e];
        for (double x : data.xs[e]) out << " " << format_double(x);
        out << "\n";
    }
}

nn::Dataset read_dataset(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw InvalidInputError("parse error in " + path + ": empty file");
    std::istringstream header(line);
    long count = 0;
    nn::Dataset data;
    if (!(header >> count >> data.input_dim >> data.classes >> data.batch_size) || count < 1) {
        throw InvalidInputError("parse error in " + path + ": bad `count d K batch_size` header");
    }
    for (long e = 0; e < count; ++e) {
        if (!std::getline(in, line)) {
            throw InvalidInputError("parse error in " + path + ": expected " +
                                    std::to_string(count) + " examples");
        }
        auto row = parse_row(line, static_cast<std::size_t>(data.input_dim) + 1, path);
        int label = static_cast<int>(row[0]);
        data.ys.push_back(label);
        data.xs.emplace_back(row.begin() + 1, row.end());
    }
    data.validate();
    return data;
}

nn::Dataset read_idx_dataset(const std::string& images_path, const std::string& labels_path,
                             int batch_size) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw InvalidInputError("cannot open file: " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw InvalidInputError("cannot open file: " + labels_path);

    if (read_be32(img, images_path) != 0x00000803u) {
        throw InvalidInputError("idx parse error: " + images_path + " is not an image file");
    }
    std::uint32_t count = read_be32(img, images_path);
    std::uint32_t rows = read_be32(img, images_path);
    std::uint32_t cols = read_be32(img, images_path);

    if (read_be32(lab, labels_path) != 0x00000801u) {
        throw InvalidInputError("idx parse error: " + labels_path + " is not a label file");
    }
    std::uint32_t label_count = read_be32(lab, labels_path);
    if (label_count != count) {
        throw InvalidInputError("idx parse error: image/label counts differ");
    }

    nn::Dataset data;
    data.input_dim = static_cast<int>(rows * cols);
    data.batch_size = batch_size;
    std::vector<unsigned char> pixels(rows * cols);
    int max_label = 0;
    for (std::uint32_t e = 0; e < count; ++e) {
        if (!img.read(reinterpret_cast<char*>(pixels.data()), pixels.size())) {
            throw InvalidInputError("idx file truncated: " + images_path);
        }
        std::vector<double> x(pixels.size());
        for (std::size_t i = 0; i < pixels.size(); ++i) x[i] = pixels[i] / 255.0;
        data.xs.push_back(std::move(x));
        char label = 0;
        if (!lab.read(&label, 1)) throw InvalidInputError("idx file truncated: " + labels_path);
        data.ys.push_back(static_cast<unsigned char>(label));
        max_label = std::max(max_label, data.ys.back());
    }
    data.classes = max_label + 1;
    data.validate();
    return data;
}

} // namespace specden::io
