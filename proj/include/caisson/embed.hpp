#pragma once

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "caisson/errors.hpp"
#include "caisson/notegen.hpp"
#include "caisson/rng.hpp"
#include "caisson/textutil.hpp"
#include "caisson/universe.hpp"
#include "caisson/vecmath.hpp"

namespace caisson {

// --- text embedding providers ----------------------------------------------

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual int dim() const = 0;
    // Unit-normalized vector; deterministic for equal input strings.
    virtual std::vector<float> embed(std::string_view text) const = 0;
};

// Hash-seeded stand-in for a sentence encoder: each token contributes a fixed
// pseudo-Gaussian direction and the sum is normalized. Equal strings collide
// exactly, and token overlap translates into cosine similarity, which is what
// the retrieval paths and baselines need from a text encoder. Symbol-shaped
// tokens (short all-caps, i.e. ticker strings) contribute at reduced weight:
// subword sentence encoders dilute rare symbols into low-information pieces,
// so their identity carries far less of the sentence vector than plain words.
class DeterministicProvider final : public EmbeddingProvider {
public:
    explicit DeterministicProvider(int dim = 384) : dim_(dim) {
        if (dim < 2) throw ValidationError("embedding dim must be >= 2");
    }

    int dim() const override { return dim_; }

    std::vector<float> embed(std::string_view text) const override {
        std::vector<std::string> tokens = tokenize_cased(text);
        if (tokens.empty()) tokens.emplace_back();
        std::vector<float> acc(static_cast<size_t>(dim_), 0.0f);
        for (const std::string& tok : tokens) {
            float w = is_upper_token(tok) ? kSymbolWeight : 1.0f;
            const std::vector<float>& tv = token_vector(to_lower(tok));
            for (size_t i = 0; i < acc.size(); ++i) acc[i] += w * tv[i];
        }
        normalize(acc);
        return acc;
    }

private:
    static constexpr uint64_t kSalt = 0x5ca1ab1e0ddbaull;
    static constexpr float kSymbolWeight = 0.5f;

    const std::vector<float>& token_vector(const std::string& tok) const {
        std::scoped_lock lock(mutex_);
        auto it = token_cache_.find(tok);
        if (it != token_cache_.end()) return it->second;
        Rng rng(fnv1a64(tok) ^ kSalt);
        std::vector<float> v(static_cast<size_t>(dim_));
        for (float& x : v) x = static_cast<float>(rng.normal());
        return token_cache_.emplace(tok, std::move(v)).first->second;
    }

    int dim_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<std::string, std::vector<float>> token_cache_;
};

// Sidecar format: "CAISEMB1" magic, u32 format_version, u32 dim, u64 count,
// then per record a u64 FNV-1a hash of the UTF-8 text and dim little-endian
// f32 values. Produced by any external sentence-encoder toolchain.
inline constexpr char kSidecarMagic[8] = {'C', 'A', 'I', 'S', 'E', 'M', 'B', '1'};
inline constexpr uint32_t kSidecarFormatVersion = 1;

inline void write_embedding_sidecar(
    const std::filesystem::path& path, int dim,
    const std::vector<std::pair<std::string, std::vector<float>>>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write embedding sidecar: " + path.string());
    out.write(kSidecarMagic, 8);
    uint32_t version = kSidecarFormatVersion;
    uint32_t d = static_cast<uint32_t>(dim);
    uint64_t count = records.size();
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&d), 4);
    out.write(reinterpret_cast<const char*>(&count), 8);
    for (const auto& [text, vec] : records) {
        if (static_cast<int>(vec.size()) != dim)
            throw ValidationError("sidecar record for '" + text + "' has wrong dimension");
        uint64_t h = fnv1a64(text);
        out.write(reinterpret_cast<const char*>(&h), 8);
        out.write(reinterpret_cast<const char*>(vec.data()),
                  static_cast<std::streamsize>(vec.size() * sizeof(float)));
    }
}

// Serves precomputed embeddings keyed by text hash. Vectors are re-normalized
// on load so the provider contract holds regardless of the producer.
class ExternalProvider final : public EmbeddingProvider {
public:
    explicit ExternalProvider(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open embedding sidecar: " + path.string());
        char magic[8];
        in.read(magic, 8);
        if (!in || std::memcmp(magic, kSidecarMagic, 8) != 0)
            throw ParseError("not an embedding sidecar: " + path.string());
        uint32_t version = 0, d = 0;
        uint64_t count = 0;
        in.read(reinterpret_cast<char*>(&version), 4);
        in.read(reinterpret_cast<char*>(&d), 4);
        in.read(reinterpret_cast<char*>(&count), 8);
        if (!in) throw ParseError("truncated sidecar header: " + path.string());
        if (version != kSidecarFormatVersion)
            throw ValidationError("unsupported sidecar format_version " + std::to_string(version));
        if (d < 2) throw ValidationError("sidecar dim must be >= 2");
        dim_ = static_cast<int>(d);
        for (uint64_t i = 0; i < count; ++i) {
            uint64_t h = 0;
            in.read(reinterpret_cast<char*>(&h), 8);
            std::vector<float> vec(d);
            in.read(reinterpret_cast<char*>(vec.data()),
                    static_cast<std::streamsize>(d * sizeof(float)));
            if (!in) throw ParseError("truncated sidecar record in " + path.string());
            normalize(vec);
            table_[h] = std::move(vec);
        }
    }

    int dim() const override { return dim_; }

    std::vector<float> embed(std::string_view text) const override {
        auto it = table_.find(fnv1a64(text));
        if (it == table_.end())
            throw ValidationError("sidecar has no embedding for text: " +
                                  std::string(text.substr(0, 60)));
        return it->second;
    }

private:
    int dim_ = 0;
    std::unordered_map<uint64_t, std::vector<float>> table_;
};

// --- ticker (entity) embeddings --------------------------------------------

struct TickerEmbeddingParams {
    int dim = 50;
    double industry_weight = 0.7;  // balance of individual vs sector-wide character
    double size_beta = 0.01;       // market-cap shift strength
    uint64_t seed = 0;
};

// All construction stages are kept so tests can check each step.
struct TickerEmbedding {
    std::string symbol;
    std::vector<float> base;           // initial Gaussian draw
    std::vector<float> industry_mixed; // blended with same-sector mean
    std::vector<float> size_adjusted;  // + beta * log(market cap) per coordinate
    std::vector<float> unit;           // normalized final embedding
};

struct TickerEmbeddingTable {
    TickerEmbeddingParams params;
    std::map<std::string, TickerEmbedding> by_symbol;

    const TickerEmbedding& at(std::string_view symbol) const {
        auto it = by_symbol.find(std::string(symbol));
        if (it == by_symbol.end())
            throw ValidationError("no embedding for ticker: " + std::string(symbol));
        return it->second;
    }
};

inline TickerEmbeddingTable build_ticker_embeddings(const UniverseConfig& universe,
                                                    const TickerEmbeddingParams& params = {}) {
    if (params.dim < 2) throw ValidationError("entity embedding dim must be >= 2");
    if (params.industry_weight < 0.0 || params.industry_weight > 1.0)
        throw ValidationError("industry_weight must lie in [0, 1]");

    const size_t d = static_cast<size_t>(params.dim);
    for (uint64_t salt = 0;; ++salt) {
        TickerEmbeddingTable table;
        table.params = params;

        for (const TickerInfo& t : universe.tickers) {
            Rng rng(params.seed ^ fnv1a64(t.symbol) ^ salt);
            TickerEmbedding e;
            e.symbol = t.symbol;
            e.base.resize(d);
            for (float& x : e.base) x = static_cast<float>(rng.normal());
            table.by_symbol.emplace(t.symbol, std::move(e));
        }

        std::map<std::string, std::vector<float>> sector_sum;
        std::map<std::string, int> sector_count;
        for (const TickerInfo& t : universe.tickers) {
            auto& sum = sector_sum[t.sector];
            if (sum.empty()) sum.assign(d, 0.0f);
            const auto& base = table.by_symbol.at(t.symbol).base;
            for (size_t i = 0; i < d; ++i) sum[i] += base[i];
            sector_count[t.sector]++;
        }

        bool degenerate = false;
        for (const TickerInfo& t : universe.tickers) {
            TickerEmbedding& e = table.by_symbol.at(t.symbol);
            const auto& sum = sector_sum[t.sector];
            float inv = 1.0f / static_cast<float>(sector_count[t.sector]);
            double lam = params.industry_weight;
            double shift = params.size_beta * std::log(t.market_cap);
            e.industry_mixed.resize(d);
            e.size_adjusted.resize(d);
            for (size_t i = 0; i < d; ++i) {
                e.industry_mixed[i] = static_cast<float>(lam * e.base[i] +
                                                         (1.0 - lam) * (sum[i] * inv));
                e.size_adjusted[i] = static_cast<float>(e.industry_mixed[i] + shift);
            }
            e.unit = e.size_adjusted;
            if (norm(e.unit) < 1e-9) {
                degenerate = true;  // redraw everything with a new salt
                break;
            }
            normalize(e.unit);
        }
        if (!degenerate) return table;
    }
}

// E_multi = (1/K) * sum_i n_i * E_i over the K distinct tickers, with n_i the
// mention count. Deliberately not re-normalized.
inline std::vector<float> combine_entities(const std::map<std::string, int>& ticker_counts,
                                           const TickerEmbeddingTable& table) {
    if (ticker_counts.empty()) throw ValidationError("combine_entities requires >= 1 ticker");
    const size_t d = static_cast<size_t>(table.params.dim);
    std::vector<float> out(d, 0.0f);
    for (const auto& [symbol, count] : ticker_counts) {
        if (count < 1) throw ValidationError("ticker " + symbol + " has non-positive count");
        const auto& unit = table.at(symbol).unit;
        float w = static_cast<float>(count);
        for (size_t i = 0; i < d; ++i) out[i] += w * unit[i];
    }
    float inv_k = 1.0f / static_cast<float>(ticker_counts.size());
    for (float& x : out) x *= inv_k;
    return out;
}

// --- concept embeddings and similarity cache -------------------------------

// Canonical-name embeddings for every concept plus the fully precomputed
// pairwise cosine cache. Immutable after construction.
struct ConceptTable {
    std::vector<std::string> names;
    std::unordered_map<std::string, size_t> index;
    std::vector<std::vector<float>> vectors;
    std::vector<double> sim;  // row-major |C| x |C|

    size_t index_of(const std::string& name) const {
        auto it = index.find(name);
        if (it == index.end()) throw ValidationError("unknown concept: " + name);
        return it->second;
    }

    double similarity(const std::string& a, const std::string& b) const {
        return sim[index_of(a) * names.size() + index_of(b)];
    }
};

inline ConceptTable build_concept_table(const UniverseConfig& universe,
                                        const EmbeddingProvider& provider) {
    ConceptTable table;
    for (const ConceptEntry& c : universe.concepts) {
        table.index[c.name] = table.names.size();
        table.names.push_back(c.name);
        table.vectors.push_back(provider.embed(c.name));
    }
    const size_t n = table.names.size();
    table.sim.assign(n * n, 0.0);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j <= i; ++j) {
            double s = cosine(table.vectors[i], table.vectors[j]);
            table.sim[i * n + j] = s;
            table.sim[j * n + i] = s;
        }
    return table;
}

// Unweighted mean of the canonical-name embeddings.
inline std::vector<float> embed_concept_set(const std::set<std::string>& concepts,
                                            const ConceptTable& table) {
    if (concepts.empty()) throw ValidationError("embed_concept_set requires >= 1 concept");
    std::vector<float> out;
    for (const std::string& c : concepts) {
        const auto& v = table.vectors[table.index_of(c)];
        if (out.empty()) out.assign(v.size(), 0.0f);
        for (size_t i = 0; i < v.size(); ++i) out[i] += v[i];
    }
    float inv = 1.0f / static_cast<float>(concepts.size());
    for (float& x : out) x *= inv;
    return out;
}

// Overlap ratio when the sets intersect, otherwise the best cached pairwise
// cosine between members.
inline double concept_set_similarity(const std::set<std::string>& c1,
                                     const std::set<std::string>& c2,
                                     const ConceptTable& table) {
    if (c1.empty() || c2.empty())
        throw ValidationError("concept_set_similarity requires non-empty sets");
    size_t overlap = 0;
    for (const std::string& c : c1) overlap += c2.count(c);
    if (overlap > 0)
        return static_cast<double>(overlap) / static_cast<double>(std::max(c1.size(), c2.size()));
    double best = -1.0;
    for (const std::string& a : c1)
        for (const std::string& b : c2) best = std::max(best, table.similarity(a, b));
    return best;
}

// --- dictionary-based concept inference -------------------------------------

// Whole-word, case-insensitive phrase matching with longest-match-first
// consumption, so "market share gain" never fires a shorter phrase inside it.
class ConceptMatcher {
public:
    ConceptMatcher() = default;

    explicit ConceptMatcher(const UniverseConfig& universe) {
        for (const ConceptEntry& c : universe.concepts) {
            add_phrase(c.name, c.name);
            for (const std::string& s : c.synonyms) add_phrase(s, c.name);
        }
        for (auto& [first, phrases] : by_first_token_)
            std::sort(phrases.begin(), phrases.end(), [](const Phrase& a, const Phrase& b) {
                return a.tokens.size() > b.tokens.size();
            });
    }

    std::set<std::string> infer(std::string_view text) const {
        std::set<std::string> found;
        std::vector<std::string> tokens = tokenize(text);
        size_t pos = 0;
        while (pos < tokens.size()) {
            size_t advance = 1;
            auto it = by_first_token_.find(tokens[pos]);
            if (it != by_first_token_.end()) {
                for (const Phrase& p : it->second) {
                    if (pos + p.tokens.size() > tokens.size()) continue;
                    bool match = true;
                    for (size_t i = 1; i < p.tokens.size(); ++i)
                        if (tokens[pos + i] != p.tokens[i]) {
                            match = false;
                            break;
                        }
                    if (match) {
                        found.insert(p.concept_name);
                        advance = p.tokens.size();
                        break;  // phrases are sorted longest first
                    }
                }
            }
            pos += advance;
        }
        return found;
    }

private:
    struct Phrase {
        std::vector<std::string> tokens;
        std::string concept_name;
    };

    void add_phrase(const std::string& phrase, const std::string& concept_name) {
        std::vector<std::string> tokens = tokenize(phrase);
        if (tokens.empty()) return;
        by_first_token_[tokens[0]].push_back({std::move(tokens), concept_name});
    }

    std::unordered_map<std::string, std::vector<Phrase>> by_first_token_;
};

inline std::set<std::string> infer_concepts_v1(std::string_view text,
                                               const ConceptMatcher& matcher) {
    return matcher.infer(text);
}

// --- per-document vectors ---------------------------------------------------

struct DocumentVectors {
    std::vector<float> som1_vec;  // [E_text ; E_entities]
    std::vector<float> som2_vec;  // [E_entities ; E_concepts]
    std::set<std::string> ticker_set;
    std::set<std::string> concept_set;
};

// Indexing-time cache of multi-entity combinations observed in the corpus.
// Query-side combinations are computed directly (they are tiny), keeping this
// structure immutable once indexing finishes.
class EntityCombinationCache {
public:
    const std::vector<float>& get(const std::map<std::string, int>& ticker_counts,
                                  const TickerEmbeddingTable& table) {
        std::string key;
        for (const auto& [sym, count] : ticker_counts) {
            key += sym;
            key += ':';
            key += std::to_string(count);
            key += '|';
        }
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        return cache_.emplace(std::move(key), combine_entities(ticker_counts, table))
            .first->second;
    }

    size_t size() const { return cache_.size(); }

private:
    std::unordered_map<std::string, std::vector<float>> cache_;
};

inline DocumentVectors document_vectors(const Note& note, const EmbeddingProvider& provider,
                                        const TickerEmbeddingTable& ticker_table,
                                        const ConceptTable& concept_table,
                                        EntityCombinationCache* cache = nullptr) {
    DocumentVectors dv;
    std::vector<float> text_emb = provider.embed(note.text);
    std::vector<float> entity = cache ? cache->get(note.ticker_counts, ticker_table)
                                      : combine_entities(note.ticker_counts, ticker_table);
    std::vector<float> concept_vec = embed_concept_set(note.concepts, concept_table);
    dv.som1_vec = concat(text_emb, entity);
    dv.som2_vec = concat(entity, concept_vec);
    for (auto& [sym, count] : note.ticker_counts) dv.ticker_set.insert(sym);
    dv.concept_set = note.concepts;
    return dv;
}

}  // namespace caisson
