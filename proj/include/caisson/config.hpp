#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include <json.hpp>

#include "caisson/embed.hpp"
#include "caisson/errors.hpp"
#include "caisson/som.hpp"

namespace caisson {

inline constexpr int kRunConfigFormatVersion = 1;

// Every stochastic stage draws from its own named seed; persisted artifacts
// embed the full config so runs are reproducible from the file alone.
struct Seeds {
    uint64_t corpus = 1101;
    uint64_t qa = 2202;
    uint64_t som1 = 3303;
    uint64_t som2 = 4404;
    uint64_t ticker = 5505;
};

struct RunConfig {
    std::string universe_path;
    Seeds seeds;

    // SOM hyperparameters (shared lattice, per-SOM learning rates)
    int som_n = 10;
    int epochs = 150;
    double alpha1_0 = 0.05;
    double alpha2_0 = 0.05;
    double gamma = 0.8;
    double sigma0 = 0.0;        // 0 -> n / 2
    double lambda_decay = 0.0;  // 0 -> 3 / epochs
    int batch_size = 32;

    // embeddings
    int text_dim = 384;
    int entity_dim = 50;
    double industry_weight = 0.7;
    double size_beta = 0.01;
    std::string provider = "deterministic";  // or "external"
    std::string sidecar_path;

    // retrieval defaults
    int k = 10;
    int radius = 1;

    int som_dim() const { return text_dim + entity_dim; }

    SomParams som_params(int which) const {
        SomParams p;
        p.n = som_n;
        p.dim = som_dim();
        p.alpha0 = which == 1 ? alpha1_0 : alpha2_0;
        p.gamma = gamma;
        p.sigma0 = sigma0;
        p.lambda_decay = lambda_decay;
        p.epochs = epochs;
        p.batch_size = batch_size;
        p.seed = which == 1 ? seeds.som1 : seeds.som2;
        return p;
    }

    TickerEmbeddingParams ticker_params() const {
        TickerEmbeddingParams p;
        p.dim = entity_dim;
        p.industry_weight = industry_weight;
        p.size_beta = size_beta;
        p.seed = seeds.ticker;
        return p;
    }

    void validate() const {
        if (som_n < 2) throw ValidationError("som_n must be >= 2");
        if (epochs < 1) throw ValidationError("epochs must be >= 1");
        if (alpha1_0 <= 0.0 || alpha1_0 > 1.0) throw ValidationError("alpha1_0 must lie in (0, 1]");
        if (alpha2_0 <= 0.0 || alpha2_0 > 1.0) throw ValidationError("alpha2_0 must lie in (0, 1]");
        if (gamma < 0.0 || gamma > 1.0) throw ValidationError("gamma must lie in [0, 1]");
        if (sigma0 < 0.0) throw ValidationError("sigma0 must be >= 0");
        if (lambda_decay < 0.0) throw ValidationError("lambda_decay must be >= 0");
        if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
        if (text_dim < 2) throw ValidationError("text_dim must be >= 2");
        if (entity_dim < 2) throw ValidationError("entity_dim must be >= 2");
        if (industry_weight < 0.0 || industry_weight > 1.0)
            throw ValidationError("industry_weight must lie in [0, 1]");
        if (k < 1) throw ValidationError("k must be >= 1");
        if (radius < 0) throw ValidationError("radius must be >= 0");
        if (provider != "deterministic" && provider != "external")
            throw ValidationError("provider must be 'deterministic' or 'external'");
        if (provider == "external" && sidecar_path.empty())
            throw ValidationError("external provider requires a sidecar_path");
    }
};

inline std::shared_ptr<EmbeddingProvider> make_provider(const RunConfig& config) {
    if (config.provider == "external")
        return std::make_shared<ExternalProvider>(config.sidecar_path);
    return std::make_shared<DeterministicProvider>(config.text_dim);
}

inline nlohmann::json run_config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["format_version"] = kRunConfigFormatVersion;
    j["universe_path"] = c.universe_path;
    j["seeds"] = {{"corpus", c.seeds.corpus},
                  {"qa", c.seeds.qa},
                  {"som1", c.seeds.som1},
                  {"som2", c.seeds.som2},
                  {"ticker", c.seeds.ticker}};
    j["som"] = {{"n", c.som_n},          {"epochs", c.epochs},
                {"alpha1_0", c.alpha1_0}, {"alpha2_0", c.alpha2_0},
                {"gamma", c.gamma},       {"sigma0", c.sigma0},
                {"lambda_decay", c.lambda_decay}, {"batch_size", c.batch_size}};
    j["embed"] = {{"text_dim", c.text_dim},
                  {"entity_dim", c.entity_dim},
                  {"industry_weight", c.industry_weight},
                  {"size_beta", c.size_beta},
                  {"provider", c.provider},
                  {"sidecar_path", c.sidecar_path}};
    j["retrieval"] = {{"k", c.k}, {"radius", c.radius}};
    return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
        int version = j.at("format_version").get<int>();
        if (version != kRunConfigFormatVersion)
            throw ValidationError("unsupported run config format_version " +
                                  std::to_string(version));
        c.universe_path = j.value("universe_path", std::string());
        const auto& s = j.at("seeds");
        c.seeds.corpus = s.at("corpus").get<uint64_t>();
        c.seeds.qa = s.at("qa").get<uint64_t>();
        c.seeds.som1 = s.at("som1").get<uint64_t>();
        c.seeds.som2 = s.at("som2").get<uint64_t>();
        c.seeds.ticker = s.at("ticker").get<uint64_t>();
        const auto& som = j.at("som");
        c.som_n = som.at("n").get<int>();
        c.epochs = som.at("epochs").get<int>();
        c.alpha1_0 = som.at("alpha1_0").get<double>();
        c.alpha2_0 = som.at("alpha2_0").get<double>();
        c.gamma = som.at("gamma").get<double>();
        c.sigma0 = som.at("sigma0").get<double>();
        c.lambda_decay = som.at("lambda_decay").get<double>();
        c.batch_size = som.at("batch_size").get<int>();
        const auto& e = j.at("embed");
        c.text_dim = e.at("text_dim").get<int>();
        c.entity_dim = e.at("entity_dim").get<int>();
        c.industry_weight = e.at("industry_weight").get<double>();
        c.size_beta = e.at("size_beta").get<double>();
        c.provider = e.at("provider").get<std::string>();
        c.sidecar_path = e.value("sidecar_path", std::string());
        const auto& r = j.at("retrieval");
        c.k = r.at("k").get<int>();
        c.radius = r.at("radius").get<int>();
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("malformed run config: ") + ex.what());
    }
    c.validate();
    return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open run config: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("run config " + path.string() + " is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

inline void save_run_config(const RunConfig& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write run config: " + path.string());
    out << run_config_to_json(c).dump(2) << '\n';
}

}  // namespace caisson
