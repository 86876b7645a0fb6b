#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "caisson/config.hpp"
#include "caisson/errors.hpp"
#include "caisson/retriever.hpp"
#include "caisson/som.hpp"
#include "caisson/universe.hpp"

namespace caisson {

// Binary model snapshot. Layout: "CSNMODL1" magic, u32 format version, a
// length-prefixed JSON block (run config, universe, Q traces), then raw
// little-endian sections for note metadata and both grids. Epoch wall-clock
// timings are intentionally excluded so identical seeds produce identical
// snapshot bytes; ticker/concept tables are rebuilt deterministically from
// the embedded config on load.
inline constexpr char kSnapshotMagic[8] = {'C', 'S', 'N', 'M', 'O', 'D', 'L', '1'};
inline constexpr uint32_t kSnapshotFormatVersion = 1;

namespace detail {

class BinaryWriter {
public:
    explicit BinaryWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot write snapshot: " + path.string());
    }

    void bytes(const void* data, size_t size) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!out_) throw IoError("snapshot write failed");
    }

    void u8(uint8_t v) { bytes(&v, 1); }
    void u32(uint32_t v) { bytes(&v, 4); }
    void u64(uint64_t v) { bytes(&v, 8); }

    void str(const std::string& s) {
        u32(static_cast<uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }

    void floats(const std::vector<float>& v) {
        u64(v.size());
        bytes(v.data(), v.size() * sizeof(float));
    }

private:
    std::ofstream out_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
        if (!in_) throw IoError("cannot open snapshot: " + path.string());
    }

    void bytes(void* data, size_t size) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
        if (!in_) throw IoError("snapshot is truncated or unreadable");
    }

    uint8_t u8() {
        uint8_t v;
        bytes(&v, 1);
        return v;
    }
    uint32_t u32() {
        uint32_t v;
        bytes(&v, 4);
        return v;
    }
    uint64_t u64() {
        uint64_t v;
        bytes(&v, 8);
        return v;
    }

    std::string str() {
        uint32_t len = u32();
        std::string s(len, '\0');
        bytes(s.data(), len);
        return s;
    }

    std::vector<float> floats() {
        uint64_t count = u64();
        std::vector<float> v(count);
        bytes(v.data(), count * sizeof(float));
        return v;
    }

private:
    std::ifstream in_;
};

inline void write_grid(BinaryWriter& w, const SomGrid& grid) {
    w.u8(grid.trained() ? 1 : 0);
    w.floats(grid.raw_weights());
    for (int node = 0; node < grid.cell_count(); ++node) {
        const auto& coll = grid.collection(node);
        w.u64(coll.size());
        for (const SomEntry& e : coll) {
            w.str(e.id);
            w.floats(e.vec);
        }
    }
}

inline SomGrid read_grid(BinaryReader& r, const SomParams& params) {
    bool trained = r.u8() != 0;
    std::vector<float> weights = r.floats();
    size_t cells = static_cast<size_t>(params.n) * static_cast<size_t>(params.n);
    std::vector<std::vector<SomEntry>> collections(cells);
    for (size_t node = 0; node < cells; ++node) {
        uint64_t count = r.u64();
        collections[node].reserve(count);
        for (uint64_t i = 0; i < count; ++i) {
            SomEntry e;
            e.id = r.str();
            e.vec = r.floats();
            collections[node].push_back(std::move(e));
        }
    }
    return SomGrid::restore(params, std::move(weights), std::move(collections), trained);
}

}  // namespace detail

inline void save_model(const CaissonModel& model, const std::filesystem::path& path) {
    detail::BinaryWriter w(path);
    w.bytes(kSnapshotMagic, 8);
    w.u32(kSnapshotFormatVersion);

    nlohmann::json meta;
    meta["config"] = run_config_to_json(model.config);
    meta["universe"] = universe_to_json(model.universe);
    meta["trace1_q"] = model.trace1.quantization_errors;
    meta["trace2_q"] = model.trace2.quantization_errors;
    meta["note_count"] = model.note_ids.size();
    w.str(meta.dump());

    for (const std::string& id : model.note_ids) {
        const NoteMeta& nm = model.meta(id);
        w.str(id);
        w.u32(static_cast<uint32_t>(nm.tickers.size()));
        for (const std::string& t : nm.tickers) w.str(t);
        w.u32(static_cast<uint32_t>(nm.concepts.size()));
        for (const std::string& c : nm.concepts) w.str(c);
        w.floats(nm.text_embedding);
    }

    detail::write_grid(w, model.som1);
    detail::write_grid(w, model.som2);
}

inline CaissonModel load_model(const std::filesystem::path& path) {
    detail::BinaryReader r(path);
    char magic[8];
    r.bytes(magic, 8);
    if (std::memcmp(magic, kSnapshotMagic, 8) != 0)
        throw ParseError("not a model snapshot: " + path.string());
    uint32_t version = r.u32();
    if (version != kSnapshotFormatVersion)
        throw ValidationError("unsupported snapshot format_version " + std::to_string(version));

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(r.str());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed snapshot metadata: ") + e.what());
    }

    CaissonModel model;
    model.config = run_config_from_json(meta.at("config"));
    model.universe = universe_from_json(meta.at("universe"));
    model.trace1.quantization_errors = meta.at("trace1_q").get<std::vector<double>>();
    model.trace2.quantization_errors = meta.at("trace2_q").get<std::vector<double>>();
    uint64_t note_count = meta.at("note_count").get<uint64_t>();

    model.provider = make_provider(model.config);
    model.ticker_table = build_ticker_embeddings(model.universe, model.config.ticker_params());
    model.concept_table = build_concept_table(model.universe, *model.provider);
    model.matcher = ConceptMatcher(model.universe);

    model.note_ids.reserve(note_count);
    for (uint64_t i = 0; i < note_count; ++i) {
        std::string id = r.str();
        NoteMeta nm;
        uint32_t tcount = r.u32();
        for (uint32_t t = 0; t < tcount; ++t) nm.tickers.insert(r.str());
        uint32_t ccount = r.u32();
        for (uint32_t c = 0; c < ccount; ++c) nm.concepts.insert(r.str());
        nm.text_embedding = r.floats();
        model.note_ids.push_back(id);
        model.notes.emplace(std::move(id), std::move(nm));
    }

    model.som1 = detail::read_grid(r, model.config.som_params(1));
    model.som2 = detail::read_grid(r, model.config.som_params(2));
    return model;
}

}  // namespace caisson
