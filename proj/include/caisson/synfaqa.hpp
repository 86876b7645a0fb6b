#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "caisson/embed.hpp"
#include "caisson/errors.hpp"
#include "caisson/notegen.hpp"
#include "caisson/rng.hpp"
#include "caisson/textutil.hpp"
#include "caisson/universe.hpp"

namespace caisson {

inline constexpr int kQaFormatVersion = 1;

enum class QType { single_hop, bridge, comparison, yes_no };

inline std::string to_string(QType t) {
    switch (t) {
        case QType::single_hop: return "single_hop";
        case QType::bridge: return "bridge";
        case QType::comparison: return "comparison";
        case QType::yes_no: return "yes_no";
    }
    return "single_hop";
}

inline QType qtype_from_string(std::string_view s) {
    if (s == "single_hop") return QType::single_hop;
    if (s == "bridge") return QType::bridge;
    if (s == "comparison") return QType::comparison;
    if (s == "yes_no") return QType::yes_no;
    throw ParseError("unknown question type: " + std::string(s));
}

struct BridgeElement {
    enum class Kind { ticker, concept_kind };
    Kind kind = Kind::concept_kind;
    std::string value;
};

inline std::string to_string(BridgeElement::Kind k) {
    return k == BridgeElement::Kind::ticker ? "ticker" : "concept";
}

struct QaPair {
    std::string id;
    std::string question;
    QType qtype = QType::single_hop;
    std::vector<std::string> gold_note_ids;  // 1 for single-hop, 2 for multi-hop
    std::optional<BridgeElement> bridge_element;
    std::set<std::string> tickers_in_q;
    std::set<std::string> concepts_in_q;
    std::string difficulty;   // easy | medium | hard
    std::string gold_answer;  // derivable answer for comparison / yes-no

    bool is_multi_hop() const { return qtype != QType::single_hop; }
};

struct MetricStats {
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct ComplexityStats {
    MetricStats word_count, char_count, ticker_count, concept_count;
};

struct QaManifest {
    uint64_t seed = 0;
    int total = 0;
    std::map<std::string, int> counts_by_type;
    std::map<std::string, int> difficulty_counts;
    ComplexityStats single_hop;
    ComplexityStats multi_hop;
};

struct SynfaqaParams {
    // multi-hop subtype mix: bridge / yes-no / comparison
    std::array<double, 3> multi_mix{0.601, 0.296, 0.103};
    double concept_bridge_pref = 2.0 / 3.0;  // concept vs ticker bridges, 2:1
    double zero_ticker_rate = 0.05;          // concept-only questions per split
    double extras_prob = 0.8;                // chance multi-hop questions name the concept union
    std::string difficulty_precedence = "easy-first";  // or "hard-first"
};

// --- bridge graph ------------------------------------------------------------

struct BridgeEdge {
    size_t a = 0;
    size_t b = 0;
    BridgeElement element;
};

// Notes grouped by shared element. Edges are implied by the groups (every
// pair of notes sharing an element is connected); edges() materializes them
// and is meant for small corpora and tests, while sampling works off the
// groups directly.
class BridgeGraph {
public:
    BridgeGraph() = default;

    explicit BridgeGraph(const std::vector<Note>& notes) {
        for (size_t i = 0; i < notes.size(); ++i) {
            for (const auto& [sym, n] : notes[i].ticker_counts) ticker_groups_[sym].push_back(i);
            for (const std::string& c : notes[i].concepts) concept_groups_[c].push_back(i);
        }
        prune(ticker_groups_);
        prune(concept_groups_);
    }

    const std::map<std::string, std::vector<size_t>>& ticker_groups() const {
        return ticker_groups_;
    }
    const std::map<std::string, std::vector<size_t>>& concept_groups() const {
        return concept_groups_;
    }

    static size_t pair_count(const std::map<std::string, std::vector<size_t>>& groups) {
        size_t total = 0;
        for (const auto& [key, members] : groups) total += members.size() * (members.size() - 1) / 2;
        return total;
    }

    size_t concept_edge_count() const { return pair_count(concept_groups_); }
    size_t ticker_edge_count() const { return pair_count(ticker_groups_); }

    std::vector<BridgeEdge> edges() const {
        std::vector<BridgeEdge> out;
        for (const auto& [sym, members] : ticker_groups_)
            for (size_t i = 0; i < members.size(); ++i)
                for (size_t j = i + 1; j < members.size(); ++j)
                    out.push_back({members[i], members[j],
                                   {BridgeElement::Kind::ticker, sym}});
        for (const auto& [name, members] : concept_groups_)
            for (size_t i = 0; i < members.size(); ++i)
                for (size_t j = i + 1; j < members.size(); ++j)
                    out.push_back({members[i], members[j],
                                   {BridgeElement::Kind::concept_kind, name}});
        return out;
    }

private:
    static void prune(std::map<std::string, std::vector<size_t>>& groups) {
        for (auto it = groups.begin(); it != groups.end();)
            it = it->second.size() < 2 ? groups.erase(it) : std::next(it);
    }

    std::map<std::string, std::vector<size_t>> ticker_groups_;
    std::map<std::string, std::vector<size_t>> concept_groups_;
};

inline BridgeGraph build_bridge_graph(const std::vector<Note>& notes) {
    return BridgeGraph(notes);
}

// --- difficulty --------------------------------------------------------------

// Easy: <=1 ticker or exactly one concept. Medium: two tickers or two
// concepts. Hard: the rest. The conditions overlap, so the configured
// precedence decides; easy-first is the default.
inline std::string classify_difficulty(int tickers, int concepts,
                                       std::string_view precedence = "easy-first") {
    bool easy = tickers <= 1 || concepts == 1;
    bool medium = tickers == 2 || concepts == 2;
    bool hard = tickers >= 3 || concepts > 2;
    if (precedence == "hard-first") {
        if (hard) return "hard";
        if (medium) return "medium";
        return "easy";
    }
    if (easy) return "easy";
    if (medium) return "medium";
    return "hard";
}

// --- question rendering -------------------------------------------------------

namespace detail {

// "A", "A and B", "A and B and C" (comparison style)
inline std::string join_and(const std::vector<std::string>& items) {
    std::string out;
    for (size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += " and ";
        out += items[i];
    }
    return out;
}

// "A and B", "A, B and C", "A, B, and C and D" (yes/no style)
inline std::string join_listed(const std::vector<std::string>& items) {
    if (items.size() <= 1) return items.empty() ? std::string() : items[0];
    if (items.size() == 2) return items[0] + " and " + items[1];
    std::string out;
    for (size_t i = 0; i + 2 < items.size(); ++i) out += items[i] + ", ";
    if (items.size() >= 4) out += "and ";
    out += items[items.size() - 2] + " and " + items.back();
    return out;
}

// lowercased concept list: "c1", "c1 and c2", "c1, c2 and c3"
inline std::string join_concepts(const std::vector<std::string>& concepts) {
    std::vector<std::string> lowered;
    lowered.reserve(concepts.size());
    for (const std::string& c : concepts) lowered.push_back(to_lower(c));
    if (lowered.size() <= 2) return join_and(lowered);
    std::string out;
    for (size_t i = 0; i + 2 < lowered.size(); ++i) out += lowered[i] + ", ";
    out += lowered[lowered.size() - 2] + " and " + lowered.back();
    return out;
}

}  // namespace detail

// Instantiates the question template for the given type. Tickers arrive in
// note order (first note's picks, then the second's); concepts start with the
// bridge concept for multi-hop types. Empty ticker lists produce the
// concept-only variants.
inline std::string render_question(QType qtype, const std::vector<std::string>& tickers,
                                   const std::vector<std::string>& concepts, Rng& rng,
                                   size_t group_a_size = 0) {
    if (concepts.empty()) throw ValidationError("questions must name at least one concept");
    std::string c0 = to_lower(concepts[0]);
    std::vector<std::string> extras(concepts.begin() + 1, concepts.end());

    switch (qtype) {
        case QType::single_hop: {
            std::string cs = detail::join_concepts(concepts);
            if (tickers.empty()) {
                switch (rng.bounded(2)) {
                    case 0: return "What are the latest developments regarding " + cs + "?";
                    default: return "Which companies stand out on " + cs + "?";
                }
            }
            std::string ts = detail::join_and(tickers);
            switch (rng.bounded(3)) {
                case 0: return "What's the latest information on " + ts + " regarding " + cs + "?";
                case 1: return "What are the latest developments affecting " + cs + " for " + ts + "?";
                default: return "What do analysts say about " + cs + " at " + ts + "?";
            }
        }
        case QType::bridge: {
            std::string tail =
                extras.empty() ? "?" : ", also weighing " + detail::join_concepts(extras) + "?";
            if (tickers.empty())
                return "What contrasting approaches emerge on " + c0 + " across recent notes" + tail;
            if (group_a_size == 0 || group_a_size >= tickers.size()) {
                // ticker bridge: shared symbol(s), concepts drawn from both notes
                std::string base = "What do the notes on " + detail::join_and(tickers) +
                                   " reveal about ";
                if (extras.empty()) return base + c0 + "?";
                std::string more =
                    extras.size() > 1
                        ? ", as well as " +
                              detail::join_concepts({extras.begin() + 1, extras.end()}) + "?"
                        : "?";
                return base + "both " + c0 + " and " + to_lower(extras[0]) + more;
            }
            std::vector<std::string> group_a(tickers.begin(),
                                             tickers.begin() + static_cast<long>(group_a_size));
            std::vector<std::string> group_b(tickers.begin() + static_cast<long>(group_a_size),
                                             tickers.end());
            std::string ta = detail::join_and(group_a);
            std::string tb = detail::join_and(group_b);
            switch (rng.bounded(2)) {
                case 0:
                    return "What different approaches do " + ta + " and " + tb + " take regarding " +
                           c0 + tail;
                default: return "How do " + ta + " and " + tb + " differ on " + c0 + tail;
            }
        }
        case QType::comparison: {
            if (tickers.size() == 4 && group_a_size == 2)
                return "What insights emerge when comparing " + c0 + " situation between " +
                       tickers[0] + " and " + tickers[1] + " and " + tickers[2] + " and " +
                       tickers[3] + "?";
            std::string tail =
                extras.empty() ? "?" : ", also considering " + detail::join_concepts(extras) + "?";
            return "Between " + detail::join_and({tickers.begin(), tickers.end()}) +
                   ", which company had more favorable " + c0 + tail;
        }
        case QType::yes_no: {
            std::string tail =
                extras.empty() ? "?" : ", given " + detail::join_concepts(extras) + "?";
            if (tickers.empty())
                return "Are recent notes pointing to similar trends in " + c0 + tail;
            return "Did " + detail::join_listed(tickers) + " experience similar trends in " + c0 +
                   tail;
        }
    }
    throw ValidationError("unhandled question type");
}

// --- generation ---------------------------------------------------------------

namespace detail {

inline MetricStats stats_of(const std::vector<double>& xs) {
    MetricStats s;
    if (xs.empty()) return s;
    double sum = 0.0;
    s.min = xs[0];
    s.max = xs[0];
    for (double x : xs) {
        sum += x;
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    s.mean = sum / static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(var / static_cast<double>(xs.size()));
    return s;
}

inline double word_count(const std::string& text) {
    return static_cast<double>(tokenize_cased(text).size());
}

template <typename T>
inline const T& pick(const std::vector<T>& v, Rng& rng) {
    return v[rng.bounded(static_cast<uint32_t>(v.size()))];
}

}  // namespace detail

// Generates single-hop questions from individual notes and multi-hop
// bridge / comparison / yes-no questions from note pairs connected through a
// shared ticker or concept. Deterministic under (corpus, seed).
inline std::pair<std::vector<QaPair>, QaManifest> generate_qa(const std::vector<Note>& notes,
                                                              const UniverseConfig& universe,
                                                              int n_single, int n_multi,
                                                              uint64_t seed,
                                                              const SynfaqaParams& params = {}) {
    if (n_single < 0 || n_multi < 0) throw ValidationError("question counts must be >= 0");
    if ((n_single > 0 || n_multi > 0) && notes.empty())
        throw InfeasibleError("cannot generate questions from an empty corpus");

    BridgeGraph graph(notes);
    ConceptMatcher matcher(universe);
    Rng rng(seed);

    std::vector<std::string> concept_keys, ticker_keys;
    for (const auto& [name, members] : graph.concept_groups()) concept_keys.push_back(name);
    for (const auto& [sym, members] : graph.ticker_groups()) ticker_keys.push_back(sym);
    if (n_multi > 0 && concept_keys.empty() && ticker_keys.empty())
        throw InfeasibleError(
            "cannot generate multi-hop questions: no ticker or concept is shared by two notes");

    std::vector<QaPair> out;
    out.reserve(static_cast<size_t>(n_single + n_multi));
    int next_id = 0;
    auto make_id = [&]() {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "qa-%06d", next_id++);
        return std::string(buf);
    };

    auto finalize = [&](QaPair& qa) {
        qa.tickers_in_q = extract_tickers(qa.question, universe);
        qa.concepts_in_q = matcher.infer(qa.question);
        qa.difficulty =
            classify_difficulty(static_cast<int>(qa.tickers_in_q.size()),
                                static_cast<int>(qa.concepts_in_q.size()),
                                params.difficulty_precedence);
    };

    // single-hop: the question names the gold note's tickers and concepts
    for (int i = 0; i < n_single; ++i) {
        const Note& note = notes[rng.bounded(static_cast<uint32_t>(notes.size()))];
        bool zero_ticker = rng.uniform() < params.zero_ticker_rate;
        std::vector<std::string> tickers;
        if (!zero_ticker)
            for (const auto& [sym, n] : note.ticker_counts) tickers.push_back(sym);
        std::vector<std::string> concepts(note.concepts.begin(), note.concepts.end());
        QaPair qa;
        qa.id = make_id();
        qa.qtype = QType::single_hop;
        qa.gold_note_ids = {note.id};
        qa.question = render_question(QType::single_hop, tickers, concepts, rng);
        finalize(qa);
        out.push_back(std::move(qa));
    }

    // multi-hop subtype targets hit the documented mix exactly; the
    // comparison share is the remainder
    int n_bridge = static_cast<int>(std::llround(params.multi_mix[0] * n_multi));
    int n_yesno = static_cast<int>(std::llround(params.multi_mix[1] * n_multi));
    if (n_bridge + n_yesno > n_multi) n_yesno = n_multi - n_bridge;

    // pick two distinct notes sharing the given element group
    auto pick_pair = [&](const std::vector<size_t>& members) -> std::pair<size_t, size_t> {
        size_t a = members[rng.bounded(static_cast<uint32_t>(members.size()))];
        size_t b = a;
        int guard = 0;
        while (b == a && guard++ < 64)
            b = members[rng.bounded(static_cast<uint32_t>(members.size()))];
        return {a, b};
    };

    auto sample_concept_pair =
        [&](std::string& concept_out) -> std::optional<std::pair<size_t, size_t>> {
        if (concept_keys.empty()) return std::nullopt;
        for (int attempt = 0; attempt < 64; ++attempt) {
            const std::string& c = detail::pick(concept_keys, rng);
            auto [a, b] = pick_pair(graph.concept_groups().at(c));
            if (a == b) continue;
            concept_out = c;
            return std::make_pair(a, b);
        }
        return std::nullopt;
    };

    // 1-2 tickers from a note, always including at least one
    auto pick_tickers = [&](const Note& note, int want) {
        std::vector<std::string> pool;
        for (const auto& [sym, n] : note.ticker_counts) pool.push_back(sym);
        rng.shuffle(pool);
        if (static_cast<int>(pool.size()) > want) pool.resize(static_cast<size_t>(want));
        return pool;
    };

    // concept list: bridge concept first, then (usually) the union of both
    // notes' concepts, capped at 7
    auto concept_list = [&](const std::string& bridge, const Note& a, const Note& b) {
        std::vector<std::string> concepts{bridge};
        if (rng.uniform() < params.extras_prob) {
            std::set<std::string> uni = a.concepts;
            uni.insert(b.concepts.begin(), b.concepts.end());
            uni.erase(bridge);
            for (const std::string& c : uni) {
                if (concepts.size() >= 7) break;
                concepts.push_back(c);
            }
        }
        return concepts;
    };

    auto metric_of = [&](const Note& note) {
        std::optional<double> v = first_number(note.text);
        return v.value_or(0.0);
    };

    for (int qi = 0; qi < n_multi; ++qi) {
        QType qtype = qi < n_bridge               ? QType::bridge
                      : qi < n_bridge + n_yesno   ? QType::yes_no
                                                  : QType::comparison;
        QaPair qa;
        qa.id = make_id();
        qa.qtype = qtype;

        if (qtype == QType::bridge) {
            bool want_concept = rng.uniform() < params.concept_bridge_pref;
            if (want_concept && concept_keys.empty()) want_concept = false;
            if (!want_concept && ticker_keys.empty()) want_concept = true;
            if (want_concept) {
                std::string c;
                auto pair = sample_concept_pair(c);
                if (!pair)
                    throw InfeasibleError(
                        "cannot generate bridge questions: no concept connects two distinct notes");
                const Note& a = notes[pair->first];
                const Note& b = notes[pair->second];
                qa.gold_note_ids = {a.id, b.id};
                qa.bridge_element = BridgeElement{BridgeElement::Kind::concept_kind, c};
                bool zero_ticker = rng.uniform() < params.zero_ticker_rate;
                std::vector<std::string> tickers;
                size_t group_a = 0;
                if (!zero_ticker) {
                    auto ta = pick_tickers(a, rng.uniform() < 0.5 ? 2 : 1);
                    auto tb = pick_tickers(b, rng.uniform() < 0.5 ? 2 : 1);
                    for (const std::string& t : ta) {
                        auto dup = std::find(tb.begin(), tb.end(), t);
                        if (dup != tb.end()) tb.erase(dup);
                    }
                    if (tb.empty()) {
                        // the second note only repeats the first note's tickers;
                        // render the shared-symbols variant instead
                        group_a = 0;
                        tickers = ta;
                    } else {
                        group_a = ta.size();
                        tickers = ta;
                        tickers.insert(tickers.end(), tb.begin(), tb.end());
                    }
                }
                qa.question =
                    render_question(QType::bridge, tickers, concept_list(c, a, b), rng, group_a);
            } else {
                if (ticker_keys.empty())
                    throw InfeasibleError(
                        "cannot generate bridge questions: no ticker connects two distinct notes");
                std::string sym;
                std::optional<std::pair<size_t, size_t>> pair;
                for (int attempt = 0; attempt < 64 && !pair; ++attempt) {
                    const std::string& s = detail::pick(ticker_keys, rng);
                    auto [a, b] = pick_pair(graph.ticker_groups().at(s));
                    if (a == b) continue;
                    sym = s;
                    pair = std::make_pair(a, b);
                }
                if (!pair)
                    throw InfeasibleError(
                        "cannot generate bridge questions: no ticker connects two distinct notes");
                const Note& a = notes[pair->first];
                const Note& b = notes[pair->second];
                qa.gold_note_ids = {a.id, b.id};
                qa.bridge_element = BridgeElement{BridgeElement::Kind::ticker, sym};
                std::string ca = *std::next(a.concepts.begin(),
                                            rng.bounded(static_cast<uint32_t>(a.concepts.size())));
                std::string cb = *std::next(b.concepts.begin(),
                                            rng.bounded(static_cast<uint32_t>(b.concepts.size())));
                std::vector<std::string> concepts{ca};
                if (cb != ca) concepts.push_back(cb);
                qa.question = render_question(QType::bridge, {sym}, concepts, rng, 0);
            }
        } else if (qtype == QType::comparison) {
            // comparisons need a shared concept and distinct tickers to contrast
            bool done = false;
            for (int attempt = 0; attempt < 64 && !done; ++attempt) {
                std::string c;
                auto pair = sample_concept_pair(c);
                if (!pair) break;
                const Note& a = notes[pair->first];
                const Note& b = notes[pair->second];
                std::string ta = detail::pick(pick_tickers(a, 1), rng);
                std::vector<std::string> pool_b;
                for (const auto& [sym, n] : b.ticker_counts)
                    if (sym != ta) pool_b.push_back(sym);
                if (pool_b.empty()) continue;
                std::string tb = detail::pick(pool_b, rng);

                qa.gold_note_ids = {a.id, b.id};
                qa.bridge_element = BridgeElement{BridgeElement::Kind::concept_kind, c};
                double ma = metric_of(a);
                double mb = metric_of(b);
                if (rng.uniform() < 0.25 && a.ticker_counts.size() >= 2) {
                    // four-ticker variant, two symbols per note, all distinct
                    auto ga = pick_tickers(a, 2);
                    std::vector<std::string> gb_pool;
                    for (const auto& [sym, n] : b.ticker_counts)
                        if (std::find(ga.begin(), ga.end(), sym) == ga.end())
                            gb_pool.push_back(sym);
                    if (ga.size() == 2 && gb_pool.size() >= 2) {
                        rng.shuffle(gb_pool);
                        gb_pool.resize(2);
                        std::vector<std::string> tickers = ga;
                        tickers.insert(tickers.end(), gb_pool.begin(), gb_pool.end());
                        qa.question = render_question(QType::comparison, tickers, {c}, rng, 2);
                        qa.gold_answer = ma >= mb ? ga[0] : gb_pool[0];
                        done = true;
                    }
                }
                if (!done) {
                    qa.question =
                        render_question(QType::comparison, {ta, tb}, concept_list(c, a, b), rng, 1);
                    qa.gold_answer = ma >= mb ? ta : tb;
                    done = true;
                }
            }
            if (!done)
                throw InfeasibleError(
                    "cannot generate comparison questions: no concept connects two notes with "
                    "distinct tickers");
        } else {
            // yes/no questions always bridge through a concept
            std::string c;
            auto pair = sample_concept_pair(c);
            if (!pair)
                throw InfeasibleError("cannot generate " + to_string(qtype) +
                                      " questions: no concept connects two distinct notes");
            const Note& a = notes[pair->first];
            const Note& b = notes[pair->second];
            qa.gold_note_ids = {a.id, b.id};
            qa.bridge_element = BridgeElement{BridgeElement::Kind::concept_kind, c};
            double ma = metric_of(a);
            double mb = metric_of(b);
            {
                bool zero_ticker = rng.uniform() < params.zero_ticker_rate;
                std::vector<std::string> tickers;
                if (!zero_ticker) {
                    auto ta = pick_tickers(a, rng.uniform() < 0.5 ? 2 : 1);
                    auto tb = pick_tickers(b, rng.uniform() < 0.5 ? 2 : 1);
                    for (const std::string& t : ta) {
                        auto dup = std::find(tb.begin(), tb.end(), t);
                        if (dup != tb.end()) tb.erase(dup);
                    }
                    tickers = ta;
                    tickers.insert(tickers.end(), tb.begin(), tb.end());
                }
                qa.question = render_question(QType::yes_no, tickers, concept_list(c, a, b), rng);
                double rel = std::abs(ma - mb) / std::max({std::abs(ma), std::abs(mb), 1e-9});
                qa.gold_answer = rel <= 0.5 ? "Yes" : "No";
            }
        }
        finalize(qa);
        out.push_back(std::move(qa));
    }

    // manifest
    QaManifest manifest;
    manifest.seed = seed;
    manifest.total = static_cast<int>(out.size());
    std::vector<double> sw, sc, st, scc, mw, mc, mt, mcc;
    for (const QaPair& qa : out) {
        manifest.counts_by_type[to_string(qa.qtype)]++;
        manifest.difficulty_counts[qa.difficulty]++;
        double words = detail::word_count(qa.question);
        double chars = static_cast<double>(qa.question.size());
        double tk = static_cast<double>(qa.tickers_in_q.size());
        double cc = static_cast<double>(qa.concepts_in_q.size());
        if (qa.is_multi_hop()) {
            mw.push_back(words);
            mc.push_back(chars);
            mt.push_back(tk);
            mcc.push_back(cc);
        } else {
            sw.push_back(words);
            sc.push_back(chars);
            st.push_back(tk);
            scc.push_back(cc);
        }
    }
    manifest.single_hop = {detail::stats_of(sw), detail::stats_of(sc), detail::stats_of(st),
                           detail::stats_of(scc)};
    manifest.multi_hop = {detail::stats_of(mw), detail::stats_of(mc), detail::stats_of(mt),
                          detail::stats_of(mcc)};
    return {std::move(out), manifest};
}

// --- persistence ---------------------------------------------------------------

inline std::filesystem::path qa_manifest_path(const std::filesystem::path& qa_path) {
    return std::filesystem::path(qa_path.string() + ".manifest.json");
}

inline nlohmann::json qa_to_json(const QaPair& qa) {
    nlohmann::json j;
    j["id"] = qa.id;
    j["question"] = qa.question;
    j["qtype"] = to_string(qa.qtype);
    j["gold_note_ids"] = qa.gold_note_ids;
    if (qa.bridge_element)
        j["bridge_element"] = {{"kind", to_string(qa.bridge_element->kind)},
                               {"value", qa.bridge_element->value}};
    j["tickers_in_q"] = qa.tickers_in_q;
    j["concepts_in_q"] = qa.concepts_in_q;
    j["difficulty"] = qa.difficulty;
    j["gold_answer"] = qa.gold_answer;
    return j;
}

inline QaPair qa_from_json(const nlohmann::json& j) {
    QaPair qa;
    try {
        qa.id = j.at("id").get<std::string>();
        qa.question = j.at("question").get<std::string>();
        qa.qtype = qtype_from_string(j.at("qtype").get<std::string>());
        qa.gold_note_ids = j.at("gold_note_ids").get<std::vector<std::string>>();
        if (j.contains("bridge_element")) {
            BridgeElement be;
            std::string kind = j.at("bridge_element").at("kind").get<std::string>();
            be.kind = kind == "ticker" ? BridgeElement::Kind::ticker
                                       : BridgeElement::Kind::concept_kind;
            be.value = j.at("bridge_element").at("value").get<std::string>();
            qa.bridge_element = be;
        }
        for (const auto& t : j.at("tickers_in_q")) qa.tickers_in_q.insert(t.get<std::string>());
        for (const auto& c : j.at("concepts_in_q")) qa.concepts_in_q.insert(c.get<std::string>());
        qa.difficulty = j.at("difficulty").get<std::string>();
        qa.gold_answer = j.value("gold_answer", std::string());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed QA record: ") + e.what());
    }
    return qa;
}

inline nlohmann::json metric_stats_to_json(const MetricStats& s) {
    return {{"mean", s.mean}, {"std", s.stddev}, {"min", s.min}, {"max", s.max}};
}

inline nlohmann::json complexity_to_json(const ComplexityStats& c) {
    return {{"word_count", metric_stats_to_json(c.word_count)},
            {"char_count", metric_stats_to_json(c.char_count)},
            {"ticker_count", metric_stats_to_json(c.ticker_count)},
            {"concept_count", metric_stats_to_json(c.concept_count)}};
}

inline void save_qa(const std::vector<QaPair>& qas, const QaManifest& manifest,
                    const std::filesystem::path& path,
                    const nlohmann::json& generator_config = nlohmann::json()) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write QA file: " + path.string());
    for (const QaPair& qa : qas) out << qa_to_json(qa).dump() << '\n';

    nlohmann::json m;
    if (!generator_config.is_null()) m["generator_config"] = generator_config;
    m["format_version"] = kQaFormatVersion;
    m["seed"] = manifest.seed;
    m["total"] = manifest.total;
    m["counts_by_type"] = manifest.counts_by_type;
    m["difficulty_counts"] = manifest.difficulty_counts;
    m["complexity"] = {{"single_hop", complexity_to_json(manifest.single_hop)},
                       {"multi_hop", complexity_to_json(manifest.multi_hop)}};
    std::ofstream mout(qa_manifest_path(path));
    if (!mout) throw IoError("cannot write QA manifest: " + qa_manifest_path(path).string());
    mout << m.dump(2) << '\n';
}

inline std::vector<QaPair> load_qa(const std::filesystem::path& path) {
    std::ifstream min(qa_manifest_path(path));
    if (!min) throw IoError("missing QA manifest: " + qa_manifest_path(path).string());
    nlohmann::json mj;
    try {
        min >> mj;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("QA manifest is not valid JSON: " + std::string(e.what()));
    }
    int version = mj.value("format_version", -1);
    if (version != kQaFormatVersion)
        throw ValidationError("unsupported QA format_version " + std::to_string(version));

    std::ifstream in(path);
    if (!in) throw IoError("cannot open QA file: " + path.string());
    std::vector<QaPair> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(qa_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("QA line " + std::to_string(lineno) + " is not valid JSON: " +
                             e.what());
        }
    }
    return out;
}

}  // namespace caisson
