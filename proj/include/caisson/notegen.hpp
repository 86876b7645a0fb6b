#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "caisson/errors.hpp"
#include "caisson/rng.hpp"
#include "caisson/textutil.hpp"
#include "caisson/universe.hpp"

namespace caisson {

inline constexpr int kCorpusFormatVersion = 1;

enum class Sentiment { positive, neutral, negative };

inline std::string to_string(Sentiment s) {
    switch (s) {
        case Sentiment::positive: return "positive";
        case Sentiment::neutral: return "neutral";
        case Sentiment::negative: return "negative";
    }
    return "neutral";
}

inline Sentiment sentiment_from_string(std::string_view s) {
    if (s == "positive") return Sentiment::positive;
    if (s == "neutral") return Sentiment::neutral;
    if (s == "negative") return Sentiment::negative;
    throw ParseError("unknown sentiment: " + std::string(s));
}

// A synthetic analyst note. Text is always exactly four sentences; every
// ticker in ticker_counts is mentioned verbatim exactly count times, and
// every concept is surfaced through its canonical name or one synonym.
struct Note {
    std::string id;
    std::string text;
    std::map<std::string, int> ticker_counts;
    std::set<std::string> concepts;
    Sentiment sentiment = Sentiment::neutral;
    bool used_synonyms = false;
};

struct CorpusManifest {
    uint64_t seed = 0;
    std::string universe_hash;
    int note_count = 0;
    std::array<int, 4> ticker_count_histogram{};   // index k-1 -> notes with k tickers
    std::array<int, 4> concept_count_histogram{};  // index m-1 -> notes with m concepts
    double synonym_usage_rate = 0.0;
};

struct NotegenParams {
    std::array<double, 4> ticker_count_probs{0.45, 0.30, 0.15, 0.10};
    std::array<double, 4> concept_count_probs{0.40, 0.30, 0.20, 0.10};
    double synonym_rate = 0.275;
    double double_mention_prob = 0.30;  // first ticker mentioned twice
    std::array<double, 3> sentiment_probs{0.45, 0.35, 0.20};
};

namespace detail {

inline std::string format_pct(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", x);
    return std::string(buf);
}

// Plausible per-concept metric ranges for the embedded "<X>%" figures.
inline std::pair<double, double> metric_range(const std::string& concept_name) {
    static const std::map<std::string, std::pair<double, double>> ranges = {
        {"Earnings beat", {1.0, 15.0}},
        {"Revenue growth", {2.0, 40.0}},
        {"Market share gain", {0.1, 20.0}},
        {"Technological disruption", {5.0, 60.0}},
        {"Price target increase", {3.0, 35.0}},
        {"Product launch", {1.0, 25.0}},
        {"Fair value", {5.0, 45.0}},
        {"Industry rivalry", {1.0, 20.0}},
        {"Profit margin expansion", {0.5, 12.0}},
        {"Upward revision", {1.0, 18.0}},
        {"Dividend increase", {2.0, 25.0}},
        {"Share buyback", {1.0, 10.0}},
        {"Cost reduction", {2.0, 20.0}},
        {"Guidance raise", {1.0, 15.0}},
        {"Debt reduction", {3.0, 30.0}},
        {"Regulatory approval", {10.0, 95.0}},
        {"Supply chain improvement", {2.0, 35.0}},
        {"Acquisition activity", {5.0, 50.0}},
        {"Capital expenditure", {5.0, 40.0}},
        {"Customer growth", {3.0, 45.0}},
        {"International expansion", {2.0, 30.0}},
        {"Inventory buildup", {3.0, 25.0}},
        {"Margin pressure", {0.5, 15.0}},
        {"Analyst upgrade", {2.0, 22.0}},
    };
    auto it = ranges.find(concept_name);
    if (it != ranges.end()) return it->second;
    return {2.0, 25.0};
}

inline const std::vector<std::string>& sentiment_tails(Sentiment s) {
    static const std::vector<std::string> positive = {
        ", indicating significant implications for its market position",
        ", supporting an improving outlook",
        ", reinforcing the positive momentum",
    };
    static const std::vector<std::string> neutral = {
        ", reflecting broader market dynamics",
        ", in line with sector trends",
        ", according to the latest channel checks",
    };
    static const std::vector<std::string> negative = {
        ", raising questions about near-term execution",
        ", weighing on investor sentiment",
        ", prompting a more cautious stance",
    };
    switch (s) {
        case Sentiment::positive: return positive;
        case Sentiment::neutral: return neutral;
        case Sentiment::negative: return negative;
    }
    return neutral;
}

// Sentence frames with a ticker slot. Every frame embeds a metric figure;
// the "market share" surface form keeps its own lead frame so corpora carry
// the classic "<T> has gained <X>% market share over the past year" shape.
inline std::string ticker_sentence(size_t family, const std::string& ticker,
                                   const std::string& phrase, const std::string& pct,
                                   const std::string& tail, bool market_share_form) {
    if (market_share_form && family == 0)
        return ticker + " has gained " + pct + "% market share over the past year" + tail + ".";
    switch (family % 3) {
        case 0: return ticker + " posted " + phrase + " of " + pct + "% in the latest quarter" + tail + ".";
        case 1: return ticker + " recorded a " + pct + "% move on " + phrase + tail + ".";
        default:
            return "Recent data shows " + ticker + " " + phrase + " traction, up " + pct +
                   "% year over year" + tail + ".";
    }
}

inline std::string concept_sentence(size_t family, const std::string& phrase,
                                    const std::string& tail) {
    switch (family % 3) {
        case 0: return "Sector peers are watching the " + phrase + " theme closely" + tail + ".";
        case 1: return "The " + phrase + " backdrop remains a key focus for investors" + tail + ".";
        default: return "Desk commentary keeps circling back to " + phrase + tail + ".";
    }
}

}  // namespace detail

// Renders the 4-sentence note body. Tickers arrive in mention order with
// their counts; concepts are assigned to sentences round-robin so each one is
// surfaced at least once.
inline std::string render_note(const UniverseConfig& universe,
                               const std::vector<std::pair<std::string, int>>& tickers,
                               const std::vector<std::string>& concepts, Sentiment sentiment,
                               bool use_synonyms, Rng& rng) {
    if (tickers.empty() || tickers.size() > 4)
        throw ValidationError("render_note requires 1-4 tickers");
    if (concepts.empty() || concepts.size() > 4)
        throw ValidationError("render_note requires 1-4 concepts");

    // surface form per concept (canonical name or one synonym, lowercased)
    std::map<std::string, std::string> phrase_of;
    std::map<std::string, size_t> family_of;
    for (const std::string& c : concepts) {
        const ConceptEntry& entry = universe.concept_entry(c);
        std::string chosen =
            use_synonyms ? entry.synonyms[rng.bounded(static_cast<uint32_t>(entry.synonyms.size()))]
                         : entry.name;
        phrase_of[c] = to_lower(chosen);
        bool market_share = phrase_of[c] == "market share";
        family_of[c] = rng.bounded(market_share ? 4u : 3u);
    }

    std::vector<std::string> mentions;
    for (auto& [sym, count] : tickers)
        for (int i = 0; i < count; ++i) mentions.push_back(sym);
    if (mentions.size() > 4) throw ValidationError("total ticker mentions exceed 4");

    const auto& tails = detail::sentiment_tails(sentiment);
    auto pick_tail = [&]() -> std::string {
        if (rng.uniform() < 0.5) return "";
        return tails[rng.bounded(static_cast<uint32_t>(tails.size()))];
    };

    // cycle the concept-only frames so repeated slots never emit the same
    // sentence twice
    size_t concept_frame_base = rng.bounded(3u);

    std::string text;
    for (size_t slot = 0; slot < 4; ++slot) {
        const std::string& concept_name = concepts[slot % concepts.size()];
        const std::string& phrase = phrase_of[concept_name];
        auto [lo, hi] = detail::metric_range(concept_name);
        std::string pct = detail::format_pct(rng.uniform(lo, hi));
        std::string tail = pick_tail();
        std::string sentence;
        if (slot < mentions.size()) {
            bool market_share = phrase == "market share";
            sentence = detail::ticker_sentence(family_of[concept_name], mentions[slot], phrase,
                                               pct, tail, market_share);
        } else {
            sentence = detail::concept_sentence(concept_frame_base + slot, phrase, tail);
        }
        if (!text.empty()) text += " ";
        text += sentence;
    }
    return text;
}

// Generates the full corpus: market-cap-weighted ticker selection, skewed
// ticker/concept count distributions, deterministic under (universe, n, seed).
inline std::pair<std::vector<Note>, CorpusManifest> generate_corpus(
    const UniverseConfig& universe, int n, uint64_t seed, const NotegenParams& params = {}) {
    if (n < 1) throw ValidationError("corpus size must be >= 1");
    if (universe.tickers.size() < 4)
        throw ValidationError("universe must contain at least 4 tickers to honor multi-ticker notes");

    Rng rng(seed);

    std::vector<double> cumulative;
    cumulative.reserve(universe.tickers.size());
    double acc = 0.0;
    for (const TickerInfo& t : universe.tickers) {
        acc += t.weight;
        cumulative.push_back(acc);
    }
    auto draw_ticker = [&]() -> size_t {
        double r = rng.uniform() * acc;
        return static_cast<size_t>(
            std::lower_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
    };

    std::vector<Note> notes;
    notes.reserve(static_cast<size_t>(n));
    CorpusManifest manifest;
    manifest.seed = seed;
    manifest.universe_hash = universe_hash(universe);
    manifest.note_count = n;
    int synonym_notes = 0;

    for (int i = 0; i < n; ++i) {
        int k = static_cast<int>(rng.categorical(params.ticker_count_probs)) + 1;
        std::vector<size_t> picked;
        while (static_cast<int>(picked.size()) < k) {
            size_t idx = draw_ticker();
            if (std::find(picked.begin(), picked.end(), idx) == picked.end()) picked.push_back(idx);
        }

        int m = static_cast<int>(rng.categorical(params.concept_count_probs)) + 1;
        m = std::min<int>(m, static_cast<int>(universe.concepts.size()));
        std::vector<size_t> cpicked;
        while (static_cast<int>(cpicked.size()) < m) {
            size_t idx = rng.bounded(static_cast<uint32_t>(universe.concepts.size()));
            if (std::find(cpicked.begin(), cpicked.end(), idx) == cpicked.end())
                cpicked.push_back(idx);
        }

        Sentiment sentiment = static_cast<Sentiment>(rng.categorical(params.sentiment_probs));
        bool use_syn = rng.uniform() < params.synonym_rate;
        int first_count = (k <= 3 && rng.uniform() < params.double_mention_prob) ? 2 : 1;

        std::vector<std::pair<std::string, int>> tickers;
        tickers.reserve(static_cast<size_t>(k));
        for (int t = 0; t < k; ++t)
            tickers.emplace_back(universe.tickers[picked[static_cast<size_t>(t)]].symbol,
                                 t == 0 ? first_count : 1);
        std::vector<std::string> concepts;
        concepts.reserve(static_cast<size_t>(m));
        for (size_t idx : cpicked) concepts.push_back(universe.concepts[idx].name);

        Note note;
        char idbuf[24];
        std::snprintf(idbuf, sizeof(idbuf), "note-%06d", i);
        note.id = idbuf;
        note.sentiment = sentiment;
        note.used_synonyms = use_syn;
        for (auto& [sym, count] : tickers) note.ticker_counts[sym] = count;
        note.concepts.insert(concepts.begin(), concepts.end());
        note.text = render_note(universe, tickers, concepts, sentiment, use_syn, rng);
        notes.push_back(std::move(note));

        manifest.ticker_count_histogram[static_cast<size_t>(k - 1)]++;
        manifest.concept_count_histogram[static_cast<size_t>(m - 1)]++;
        if (use_syn) ++synonym_notes;
    }
    manifest.synonym_usage_rate = static_cast<double>(synonym_notes) / static_cast<double>(n);
    return {std::move(notes), manifest};
}

// --- corpus persistence ----------------------------------------------------

inline std::filesystem::path corpus_manifest_path(const std::filesystem::path& corpus_path) {
    return std::filesystem::path(corpus_path.string() + ".manifest.json");
}

inline nlohmann::json note_to_json(const Note& note) {
    nlohmann::json j;
    j["id"] = note.id;
    j["text"] = note.text;
    j["ticker_counts"] = note.ticker_counts;
    j["concepts"] = note.concepts;
    j["sentiment"] = to_string(note.sentiment);
    j["used_synonyms"] = note.used_synonyms;
    return j;
}

inline Note note_from_json(const nlohmann::json& j) {
    Note note;
    try {
        note.id = j.at("id").get<std::string>();
        note.text = j.at("text").get<std::string>();
        note.ticker_counts = j.at("ticker_counts").get<std::map<std::string, int>>();
        for (const auto& c : j.at("concepts")) note.concepts.insert(c.get<std::string>());
        note.sentiment = sentiment_from_string(j.at("sentiment").get<std::string>());
        note.used_synonyms = j.at("used_synonyms").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed note record: ") + e.what());
    }
    return note;
}

inline void save_corpus(const std::vector<Note>& notes, const CorpusManifest& manifest,
                        const std::filesystem::path& path,
                        const nlohmann::json& generator_config = nlohmann::json()) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write corpus file: " + path.string());
    for (const Note& note : notes) out << note_to_json(note).dump() << '\n';

    nlohmann::json m;
    if (!generator_config.is_null()) m["generator_config"] = generator_config;
    m["format_version"] = kCorpusFormatVersion;
    m["seed"] = manifest.seed;
    m["universe_hash"] = manifest.universe_hash;
    m["note_count"] = manifest.note_count;
    nlohmann::json th, ch;
    for (int i = 0; i < 4; ++i) {
        th[std::to_string(i + 1)] = manifest.ticker_count_histogram[static_cast<size_t>(i)];
        ch[std::to_string(i + 1)] = manifest.concept_count_histogram[static_cast<size_t>(i)];
    }
    m["ticker_count_histogram"] = std::move(th);
    m["concept_count_histogram"] = std::move(ch);
    m["synonym_usage_rate"] = manifest.synonym_usage_rate;
    std::ofstream mout(corpus_manifest_path(path));
    if (!mout) throw IoError("cannot write corpus manifest: " + corpus_manifest_path(path).string());
    mout << m.dump(2) << '\n';
}

inline std::pair<std::vector<Note>, CorpusManifest> load_corpus(
    const std::filesystem::path& path) {
    std::ifstream min(corpus_manifest_path(path));
    if (!min) throw IoError("missing corpus manifest: " + corpus_manifest_path(path).string());
    nlohmann::json mj;
    try {
        min >> mj;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("corpus manifest is not valid JSON: " + std::string(e.what()));
    }
    CorpusManifest manifest;
    try {
        int version = mj.at("format_version").get<int>();
        if (version != kCorpusFormatVersion)
            throw ValidationError("unsupported corpus format_version " + std::to_string(version));
        manifest.seed = mj.at("seed").get<uint64_t>();
        manifest.universe_hash = mj.at("universe_hash").get<std::string>();
        manifest.note_count = mj.at("note_count").get<int>();
        for (int i = 0; i < 4; ++i) {
            manifest.ticker_count_histogram[static_cast<size_t>(i)] =
                mj.at("ticker_count_histogram").at(std::to_string(i + 1)).get<int>();
            manifest.concept_count_histogram[static_cast<size_t>(i)] =
                mj.at("concept_count_histogram").at(std::to_string(i + 1)).get<int>();
        }
        manifest.synonym_usage_rate = mj.at("synonym_usage_rate").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed corpus manifest: ") + e.what());
    }

    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus file: " + path.string());
    std::vector<Note> notes;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("corpus line " + std::to_string(lineno) +
                             " is not valid JSON: " + e.what());
        }
        notes.push_back(note_from_json(j));
    }
    if (static_cast<int>(notes.size()) != manifest.note_count)
        throw ValidationError("corpus has " + std::to_string(notes.size()) +
                              " notes but manifest declares " +
                              std::to_string(manifest.note_count));
    return {std::move(notes), manifest};
}

}  // namespace caisson
