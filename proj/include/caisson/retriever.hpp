#pragma once

#include <algorithm>
#include <chrono>
#include <memory>
#include <set>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "caisson/config.hpp"
#include "caisson/embed.hpp"
#include "caisson/errors.hpp"
#include "caisson/notegen.hpp"
#include "caisson/som.hpp"
#include "caisson/universe.hpp"
#include "caisson/vecmath.hpp"

namespace caisson {

inline constexpr double kTickerWeight = 0.6;
inline constexpr double kConceptWeight = 0.2;
inline constexpr double kSemanticWeight = 0.2;

struct NoteMeta {
    std::set<std::string> tickers;
    std::set<std::string> concepts;
    std::vector<float> text_embedding;
};

// Everything derived from a corpus before SOM training: embedding tables,
// per-note vectors for both paths, and per-note metadata. Baselines index
// straight off this; CAISSON additionally trains its two grids on it.
struct IndexedCorpus {
    std::shared_ptr<EmbeddingProvider> provider;
    UniverseConfig universe;
    TickerEmbeddingTable ticker_table;
    ConceptTable concept_table;
    ConceptMatcher matcher;
    std::vector<std::string> ids;
    std::vector<NoteMeta> metas;
    std::vector<std::vector<float>> som1_vecs;
    std::vector<std::vector<float>> som2_vecs;
    std::unordered_map<std::string, size_t> id_index;
};

inline IndexedCorpus index_corpus(const std::vector<Note>& notes, const UniverseConfig& universe,
                                  const RunConfig& config,
                                  std::shared_ptr<EmbeddingProvider> provider = nullptr) {
    IndexedCorpus index;
    index.provider = provider ? std::move(provider) : make_provider(config);
    if (index.provider->dim() != config.text_dim)
        throw ValidationError("provider dim does not match configured text_dim");
    index.universe = universe;
    index.ticker_table = build_ticker_embeddings(universe, config.ticker_params());
    index.concept_table = build_concept_table(universe, *index.provider);
    index.matcher = ConceptMatcher(universe);

    EntityCombinationCache cache;
    index.ids.reserve(notes.size());
    for (const Note& note : notes) {
        if (!index.id_index.emplace(note.id, index.ids.size()).second)
            throw ValidationError("duplicate note id in corpus: " + note.id);
        DocumentVectors dv =
            document_vectors(note, *index.provider, index.ticker_table, index.concept_table, &cache);
        NoteMeta meta;
        meta.tickers = std::move(dv.ticker_set);
        meta.concepts = std::move(dv.concept_set);
        meta.text_embedding.assign(dv.som1_vec.begin(),
                                   dv.som1_vec.begin() + config.text_dim);
        index.ids.push_back(note.id);
        index.metas.push_back(std::move(meta));
        index.som1_vecs.push_back(std::move(dv.som1_vec));
        index.som2_vecs.push_back(std::move(dv.som2_vec));
    }
    return index;
}

// The trained engine: both SOMs plus the immutable lookup state needed to
// parse and score queries. Read-only after construction; safe to share.
struct CaissonModel {
    RunConfig config;
    UniverseConfig universe;
    TickerEmbeddingTable ticker_table;
    ConceptTable concept_table;
    ConceptMatcher matcher;
    std::shared_ptr<EmbeddingProvider> provider;
    SomGrid som1;
    SomGrid som2;
    std::vector<std::string> note_ids;
    std::unordered_map<std::string, NoteMeta> notes;
    TrainingTrace trace1;
    TrainingTrace trace2;

    bool trained() const { return som1.trained() && som2.trained(); }

    const NoteMeta& meta(const std::string& id) const {
        auto it = notes.find(id);
        if (it == notes.end()) throw ValidationError("unknown note id: " + id);
        return it->second;
    }
};

// Trains both SOMs (concurrently when asked; they share no state) and seals
// the model.
inline CaissonModel train_model(IndexedCorpus index, const RunConfig& config,
                                bool parallel = true) {
    CaissonModel model;
    model.config = config;
    model.universe = std::move(index.universe);
    model.ticker_table = std::move(index.ticker_table);
    model.concept_table = std::move(index.concept_table);
    model.matcher = std::move(index.matcher);
    model.provider = std::move(index.provider);
    model.note_ids = index.ids;

    std::vector<SomEntry> inputs1, inputs2;
    inputs1.reserve(index.ids.size());
    inputs2.reserve(index.ids.size());
    for (size_t i = 0; i < index.ids.size(); ++i) {
        inputs1.push_back({index.ids[i], std::move(index.som1_vecs[i])});
        inputs2.push_back({index.ids[i], std::move(index.som2_vecs[i])});
        model.notes.emplace(index.ids[i], std::move(index.metas[i]));
    }

    model.som1 = SomGrid::init(config.som_params(1));
    model.som2 = SomGrid::init(config.som_params(2));
    if (parallel) {
        std::thread t1([&] { model.trace1 = model.som1.train(inputs1); });
        model.trace2 = model.som2.train(inputs2);
        t1.join();
    } else {
        model.trace1 = model.som1.train(inputs1);
        model.trace2 = model.som2.train(inputs2);
    }
    return model;
}

inline CaissonModel build_model(const std::vector<Note>& notes, const UniverseConfig& universe,
                                const RunConfig& config, bool parallel = true) {
    return train_model(index_corpus(notes, universe, config), config, parallel);
}

// --- query processing -------------------------------------------------------

struct ParsedQuery {
    std::string raw;
    std::set<std::string> tickers;
    std::set<std::string> concepts;
    std::vector<float> text_embedding;
    std::vector<float> som1_query_vec;
    std::vector<float> som2_query_vec;
};

// Mirrors document construction: [text ; entities] and [entities ; concepts],
// with zero segments standing in for absent tickers/concepts. Query entity
// combinations always use mention counts of 1.
inline ParsedQuery parse_query(std::string_view raw, const UniverseConfig& universe,
                               const EmbeddingProvider& provider,
                               const TickerEmbeddingTable& ticker_table,
                               const ConceptTable& concept_table, const ConceptMatcher& matcher) {
    ParsedQuery q;
    q.raw = std::string(raw);
    q.tickers = extract_tickers(raw, universe);
    q.concepts = matcher.infer(raw);
    q.text_embedding = provider.embed(raw);

    std::vector<float> entity(static_cast<size_t>(ticker_table.params.dim), 0.0f);
    if (!q.tickers.empty()) {
        std::map<std::string, int> counts;
        for (const std::string& t : q.tickers) counts[t] = 1;
        entity = combine_entities(counts, ticker_table);
    }
    std::vector<float> concept_seg(q.text_embedding.size(), 0.0f);
    if (!q.concepts.empty()) concept_seg = embed_concept_set(q.concepts, concept_table);

    q.som1_query_vec = concat(q.text_embedding, entity);
    q.som2_query_vec = concat(entity, concept_seg);
    return q;
}

inline ParsedQuery parse_query(std::string_view raw, const CaissonModel& model) {
    return parse_query(raw, model.universe, *model.provider, model.ticker_table,
                       model.concept_table, model.matcher);
}

// |T_q cap T_d| / max(|T_q|, |T_d|); 1 when both sets are empty and 0 when
// exactly one is, so no-entity queries rank purely on concepts and semantics.
inline double ticker_score(const std::set<std::string>& t_q, const std::set<std::string>& t_d) {
    if (t_q.empty() && t_d.empty()) return 1.0;
    if (t_q.empty() || t_d.empty()) return 0.0;
    size_t overlap = 0;
    for (const std::string& t : t_q) overlap += t_d.count(t);
    return static_cast<double>(overlap) / static_cast<double>(std::max(t_q.size(), t_d.size()));
}

struct ScoredNote {
    std::string id;
    double ticker_score = 0.0;
    double concept_score = 0.0;
    double semantic_score = 0.0;
    double final_score = 0.0;
    bool from_som1 = false;
    bool from_som2 = false;
};

struct RetrievalResult {
    std::string query;
    std::vector<ScoredNote> ranked;
    double elapsed_ms = 0.0;
};

// Score(q, d) = 0.6 TickerScore + 0.2 ConceptScore + 0.2 SemanticScore.
// SemanticScore is the text-embedding cosine only; entity evidence already
// enters through TickerScore.
inline ScoredNote score_note(const ParsedQuery& q, const std::string& id, const NoteMeta& meta,
                             const ConceptTable& concept_table) {
    ScoredNote s;
    s.id = id;
    s.ticker_score = ticker_score(q.tickers, meta.tickers);
    s.concept_score = (q.concepts.empty() || meta.concepts.empty())
                          ? 0.0
                          : concept_set_similarity(q.concepts, meta.concepts, concept_table);
    s.semantic_score = cosine(q.text_embedding, meta.text_embedding);
    s.final_score = kTickerWeight * s.ticker_score + kConceptWeight * s.concept_score +
                    kSemanticWeight * s.semantic_score;
    return s;
}

inline ScoredNote score_note(const ParsedQuery& q, const std::string& id,
                             const CaissonModel& model) {
    return score_note(q, id, model.meta(id), model.concept_table);
}

namespace detail {

inline void rank_and_truncate(std::vector<ScoredNote>& scored, int k) {
    std::sort(scored.begin(), scored.end(), [](const ScoredNote& a, const ScoredNote& b) {
        if (a.final_score != b.final_score) return a.final_score > b.final_score;
        return a.id < b.id;
    });
    if (static_cast<int>(scored.size()) > k) scored.resize(static_cast<size_t>(k));
}

}  // namespace detail

// Dual-path search: candidates are the union of the two SOM neighborhoods,
// deduplicated by note id with source paths recorded, scored and ranked.
// The default radius 1 escalates once to 2 if the union is thinner than k.
inline RetrievalResult retrieve(const CaissonModel& model, const ParsedQuery& q, int k,
                                int radius) {
    if (!model.trained()) throw ValidationError("model is not trained");
    if (k < 1) throw ValidationError("k must be >= 1");
    auto started = std::chrono::steady_clock::now();

    auto gather = [&](int r) {
        std::unordered_map<std::string_view, std::pair<bool, bool>> sources;
        for (const SomEntry* e : model.som1.neighborhood_search(q.som1_query_vec, r))
            sources[e->id].first = true;
        for (const SomEntry* e : model.som2.neighborhood_search(q.som2_query_vec, r))
            sources[e->id].second = true;
        return sources;
    };

    auto sources = gather(radius);
    if (static_cast<int>(sources.size()) < k && radius == 1) sources = gather(2);

    std::vector<ScoredNote> scored;
    scored.reserve(sources.size());
    for (const auto& [id_view, paths] : sources) {
        std::string id(id_view);
        ScoredNote s = score_note(q, id, model);
        s.from_som1 = paths.first;
        s.from_som2 = paths.second;
        scored.push_back(std::move(s));
    }
    detail::rank_and_truncate(scored, k);

    RetrievalResult result;
    result.query = q.raw;
    result.ranked = std::move(scored);
    result.elapsed_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - started)
                            .count();
    return result;
}

inline RetrievalResult retrieve(const CaissonModel& model, const ParsedQuery& q) {
    return retrieve(model, q, model.config.k, model.config.radius);
}

}  // namespace caisson
