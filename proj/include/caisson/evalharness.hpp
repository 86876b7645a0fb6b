#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "caisson/errors.hpp"
#include "caisson/retriever.hpp"
#include "caisson/synfaqa.hpp"

namespace caisson {

inline constexpr int kReportFormatVersion = 1;

// Uniform retrieval surface for the benchmark: ranked note ids for a parsed
// query.
class BaselineRetriever {
public:
    virtual ~BaselineRetriever() = default;
    virtual std::string name() const = 0;
    virtual std::vector<std::string> retrieve(const ParsedQuery& q, int k) const = 0;
};

namespace detail {

struct IdScore {
    const std::string* id;
    double score;
};

inline std::vector<std::string> top_k_ids(std::vector<IdScore>& scored, int k) {
    std::sort(scored.begin(), scored.end(), [](const IdScore& a, const IdScore& b) {
        if (a.score != b.score) return a.score > b.score;
        return *a.id < *b.id;
    });
    if (static_cast<int>(scored.size()) > k) scored.resize(static_cast<size_t>(k));
    std::vector<std::string> out;
    out.reserve(scored.size());
    for (const IdScore& s : scored) out.push_back(*s.id);
    return out;
}

}  // namespace detail

// Weak baseline: plain cosine over text embeddings, whole corpus scan.
class TextRagRetriever final : public BaselineRetriever {
public:
    explicit TextRagRetriever(const IndexedCorpus& index) : index_(&index) {}

    std::string name() const override { return "TextRAG"; }

    std::vector<std::string> retrieve(const ParsedQuery& q, int k) const override {
        std::vector<detail::IdScore> scored;
        scored.reserve(index_->ids.size());
        for (size_t i = 0; i < index_->ids.size(); ++i)
            scored.push_back(
                {&index_->ids[i], cosine(q.text_embedding, index_->metas[i].text_embedding)});
        return detail::top_k_ids(scored, k);
    }

private:
    const IndexedCorpus* index_;
};

// Strong baseline: cosine over the concatenated text+entity vectors (the same
// representation as CAISSON's first SOM path) with ticker-aware candidate
// filtering. Queries naming tickers are restricted to notes sharing at least
// one of them; otherwise the whole corpus is scanned.
class TextEntityRagRetriever final : public BaselineRetriever {
public:
    explicit TextEntityRagRetriever(const IndexedCorpus& index) : index_(&index) {
        for (size_t i = 0; i < index.ids.size(); ++i)
            for (const std::string& t : index.metas[i].tickers) by_ticker_[t].push_back(i);
    }

    std::string name() const override { return "TextEntityRAG"; }

    std::vector<std::string> retrieve(const ParsedQuery& q, int k) const override {
        std::vector<size_t> candidates;
        if (!q.tickers.empty()) {
            std::vector<size_t> merged;
            for (const std::string& t : q.tickers) {
                auto it = by_ticker_.find(t);
                if (it == by_ticker_.end()) continue;
                merged.insert(merged.end(), it->second.begin(), it->second.end());
            }
            std::sort(merged.begin(), merged.end());
            merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
            candidates = std::move(merged);
        }
        if (candidates.empty()) {
            candidates.resize(index_->ids.size());
            for (size_t i = 0; i < candidates.size(); ++i) candidates[i] = i;
        }
        std::vector<detail::IdScore> scored;
        scored.reserve(candidates.size());
        for (size_t i : candidates)
            scored.push_back({&index_->ids[i], cosine(q.som1_query_vec, index_->som1_vecs[i])});
        return detail::top_k_ids(scored, k);
    }

private:
    const IndexedCorpus* index_;
    std::unordered_map<std::string, std::vector<size_t>> by_ticker_;
};

class CaissonRetrieverAdapter final : public BaselineRetriever {
public:
    explicit CaissonRetrieverAdapter(const CaissonModel& model) : model_(&model) {}

    std::string name() const override { return "CAISSON"; }

    std::vector<std::string> retrieve(const ParsedQuery& q, int k) const override {
        RetrievalResult r = caisson::retrieve(*model_, q, k, model_->config.radius);
        std::vector<std::string> out;
        out.reserve(r.ranked.size());
        for (const ScoredNote& s : r.ranked) out.push_back(s.id);
        return out;
    }

private:
    const CaissonModel* model_;
};

// --- metrics -----------------------------------------------------------------

struct EvalRecord {
    std::string qa_id;
    std::string model;
    QType qtype = QType::single_hop;
    int ticker_count = 0;
    int rank_of_first_gold = 0;  // 0 = no gold in top-k
    double reciprocal_rank = 0.0;
    double reciprocal_rank_strict = 0.0;  // all golds required in top-k
    bool hit1 = false, hit5 = false, hit10 = false;
    double ticker_disagreement = 1.0;
    double concept_disagreement = 1.0;
    double elapsed_ms = 0.0;
};

// 1 - mean top-k agreement between the query's sets and each retrieved
// note's sets. Agreement follows the ticker_score conventions: 1 when both
// sides are empty, 0 when exactly one is; the concept side is clamped to
// [0, 1] before averaging.
inline std::pair<double, double> disagreement(const ParsedQuery& q,
                                              const std::vector<std::string>& retrieved,
                                              const IndexedCorpus& index, int k) {
    if (k < 1) throw ValidationError("disagreement requires k >= 1");
    size_t n = std::min(retrieved.size(), static_cast<size_t>(k));
    if (n == 0) return {1.0, 1.0};
    double t_sum = 0.0, c_sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        auto it = index.id_index.find(retrieved[i]);
        if (it == index.id_index.end())
            throw ValidationError("retrieved unknown note id: " + retrieved[i]);
        const NoteMeta& meta = index.metas[it->second];
        t_sum += ticker_score(q.tickers, meta.tickers);
        if (q.concepts.empty() && meta.concepts.empty())
            c_sum += 1.0;
        else if (q.concepts.empty() || meta.concepts.empty())
            c_sum += 0.0;
        else
            c_sum += std::clamp(concept_set_similarity(q.concepts, meta.concepts,
                                                       index.concept_table),
                                0.0, 1.0);
    }
    double inv = 1.0 / static_cast<double>(n);
    return {1.0 - t_sum * inv, 1.0 - c_sum * inv};
}

struct GroupStats {
    int count = 0;
    double mrr = 0.0;
    double mrr_strict = 0.0;
    double top1 = 0.0;
    double top5 = 0.0;
    double top10 = 0.0;
    double ticker_dis = 0.0;
    double concept_dis = 0.0;
    double mean_ms = 0.0;
};

struct EvalReport {
    int k_max = 10;
    bool strict_multi_gold = false;
    std::vector<std::string> model_names;
    std::map<std::string, GroupStats> overall;                      // model ->
    std::map<std::string, std::map<std::string, GroupStats>> by_type;    // model -> slice ->
    std::map<std::string, std::map<int, GroupStats>> by_ticker_count;    // model -> 0..4 ->
    std::vector<EvalRecord> records;
};

struct EvalOptions {
    int k_max = 10;
    bool strict_multi_gold = false;
    size_t max_questions = 1000;  // stratified 50/50 sample above this
    uint64_t sample_seed = 17;
};

namespace detail {

inline GroupStats aggregate(const std::vector<const EvalRecord*>& records) {
    GroupStats g;
    g.count = static_cast<int>(records.size());
    if (records.empty()) return g;
    for (const EvalRecord* r : records) {
        g.mrr += r->reciprocal_rank;
        g.mrr_strict += r->reciprocal_rank_strict;
        g.top1 += r->hit1 ? 1.0 : 0.0;
        g.top5 += r->hit5 ? 1.0 : 0.0;
        g.top10 += r->hit10 ? 1.0 : 0.0;
        g.ticker_dis += r->ticker_disagreement;
        g.concept_dis += r->concept_disagreement;
        g.mean_ms += r->elapsed_ms;
    }
    double inv = 1.0 / static_cast<double>(records.size());
    g.mrr *= inv;
    g.mrr_strict *= inv;
    g.top1 *= inv;
    g.top5 *= inv;
    g.top10 *= inv;
    g.ticker_dis *= inv;
    g.concept_dis *= inv;
    g.mean_ms *= inv;
    return g;
}

}  // namespace detail

// Stratified 500/500-style sample mirroring the benchmark protocol: applied
// only when the QA set is larger than max_questions.
inline std::vector<QaPair> sample_questions(const std::vector<QaPair>& qas,
                                            const EvalOptions& options) {
    if (qas.size() <= options.max_questions) return qas;
    std::vector<size_t> single, multi;
    for (size_t i = 0; i < qas.size(); ++i)
        (qas[i].is_multi_hop() ? multi : single).push_back(i);
    Rng rng(options.sample_seed);
    rng.shuffle(single);
    rng.shuffle(multi);
    size_t half = options.max_questions / 2;
    std::vector<size_t> chosen;
    for (size_t i = 0; i < std::min(half, single.size()); ++i) chosen.push_back(single[i]);
    for (size_t i = 0; i < std::min(options.max_questions - std::min(half, single.size()),
                                    multi.size());
         ++i)
        chosen.push_back(multi[i]);
    std::sort(chosen.begin(), chosen.end());
    std::vector<QaPair> out;
    out.reserve(chosen.size());
    for (size_t i : chosen) out.push_back(qas[i]);
    return out;
}

// Runs every (model, question) pair, checks gold ids against the corpus
// (missing ids are dataset corruption and abort), and aggregates the report
// slices. Latency wraps the retrieve call only.
inline EvalReport evaluate(const std::vector<const BaselineRetriever*>& models,
                           const std::vector<QaPair>& qa_set, const IndexedCorpus& index,
                           const EvalOptions& options = {}) {
    if (models.empty()) throw ValidationError("evaluate requires at least one model");
    if (qa_set.empty()) throw ValidationError("evaluate requires a non-empty question set");

    std::vector<QaPair> questions = sample_questions(qa_set, options);
    for (const QaPair& qa : questions)
        for (const std::string& gold : qa.gold_note_ids)
            if (!index.id_index.count(gold))
                throw ValidationError("QA " + qa.id + " references note id '" + gold +
                                      "' absent from the corpus");

    EvalReport report;
    report.k_max = options.k_max;
    report.strict_multi_gold = options.strict_multi_gold;

    std::vector<ParsedQuery> parsed;
    parsed.reserve(questions.size());
    for (const QaPair& qa : questions)
        parsed.push_back(parse_query(qa.question, index.universe, *index.provider,
                                     index.ticker_table, index.concept_table, index.matcher));

    for (const BaselineRetriever* model : models) {
        report.model_names.push_back(model->name());
        for (size_t qi = 0; qi < questions.size(); ++qi) {
            const QaPair& qa = questions[qi];
            const ParsedQuery& q = parsed[qi];

            auto started = std::chrono::steady_clock::now();
            std::vector<std::string> ranked = model->retrieve(q, options.k_max);
            double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - started)
                            .count();

            EvalRecord rec;
            rec.qa_id = qa.id;
            rec.model = model->name();
            rec.qtype = qa.qtype;
            rec.ticker_count = static_cast<int>(qa.tickers_in_q.size());
            rec.elapsed_ms = ms;

            int first = 0;
            int worst = 0;
            size_t found = 0;
            for (const std::string& gold : qa.gold_note_ids) {
                auto it = std::find(ranked.begin(), ranked.end(), gold);
                if (it == ranked.end()) continue;
                int rank = static_cast<int>(it - ranked.begin()) + 1;
                ++found;
                if (first == 0 || rank < first) first = rank;
                worst = std::max(worst, rank);
            }
            rec.rank_of_first_gold = first;
            rec.reciprocal_rank = first > 0 ? 1.0 / first : 0.0;
            rec.reciprocal_rank_strict =
                found == qa.gold_note_ids.size() && worst > 0 ? 1.0 / worst : 0.0;
            rec.hit1 = first > 0 && first <= 1;
            rec.hit5 = first > 0 && first <= 5;
            rec.hit10 = first > 0 && first <= 10;
            auto [tdis, cdis] = disagreement(q, ranked, index, options.k_max);
            rec.ticker_disagreement = tdis;
            rec.concept_disagreement = cdis;
            report.records.push_back(std::move(rec));
        }
    }

    // aggregate slices
    for (const std::string& name : report.model_names) {
        std::vector<const EvalRecord*> all;
        std::map<std::string, std::vector<const EvalRecord*>> by_type;
        std::map<int, std::vector<const EvalRecord*>> by_tickers;
        for (const EvalRecord& r : report.records) {
            if (r.model != name) continue;
            all.push_back(&r);
            by_type[r.qtype == QType::single_hop ? "single_hop" : "multi_hop"].push_back(&r);
            if (r.qtype != QType::single_hop) by_type[to_string(r.qtype)].push_back(&r);
            by_tickers[std::min(r.ticker_count, 4)].push_back(&r);
        }
        report.overall[name] = detail::aggregate(all);
        for (auto& [slice, records] : by_type)
            report.by_type[name][slice] = detail::aggregate(records);
        for (auto& [count, records] : by_tickers)
            report.by_ticker_count[name][count] = detail::aggregate(records);
    }
    return report;
}

// --- export -------------------------------------------------------------------

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return std::string(buf);
}

inline void write_stats_row(std::ofstream& out, const GroupStats& g, bool include_timing) {
    out << g.count << '\t' << fmt(g.mrr) << '\t' << fmt(g.top1) << '\t' << fmt(g.top5) << '\t'
        << fmt(g.top10) << '\t' << (include_timing ? fmt(g.mean_ms) : std::string("-")) << '\t'
        << fmt(g.ticker_dis) << '\t' << fmt(g.concept_dis);
}

inline nlohmann::json stats_to_json(const GroupStats& g, bool include_timing, bool strict) {
    nlohmann::json j = {{"count", g.count},          {"mrr", g.mrr},
                        {"top1", g.top1},            {"top5", g.top5},
                        {"top10", g.top10},          {"ticker_disagreement", g.ticker_dis},
                        {"concept_disagreement", g.concept_dis}};
    if (include_timing) j["mean_ms"] = g.mean_ms;
    if (strict) j["mrr_strict"] = g.mrr_strict;
    return j;
}

}  // namespace detail

// Writes overall.tsv / by_type.tsv / by_ticker.tsv (the Tables 6-8 layout),
// a machine-readable report.json and the raw per-question records. Timing
// columns can be excluded for byte-reproducible reports.
inline void report_export(const EvalReport& report, const std::filesystem::path& out_dir,
                          bool include_timing = true) {
    if (report.records.empty()) throw ValidationError("cannot export an empty report");
    std::filesystem::create_directories(out_dir);

    {
        std::ofstream out(out_dir / "overall.tsv");
        if (!out) throw IoError("cannot write overall.tsv");
        out << "model\tcount\tmrr\ttop1\ttop5\ttop10\ttime_ms\tticker_dis\tconcept_dis";
        if (report.strict_multi_gold) out << "\tmrr_strict";
        out << '\n';
        for (const std::string& name : report.model_names) {
            const GroupStats& g = report.overall.at(name);
            out << name << '\t';
            detail::write_stats_row(out, g, include_timing);
            if (report.strict_multi_gold) out << '\t' << detail::fmt(g.mrr_strict);
            out << '\n';
        }
    }
    {
        std::ofstream out(out_dir / "by_type.tsv");
        if (!out) throw IoError("cannot write by_type.tsv");
        out << "model\tquestion_type\tcount\tmrr\ttop1\ttop5\ttop10\ttime_ms\tticker_dis\t"
               "concept_dis\n";
        for (const std::string& name : report.model_names)
            for (const auto& [slice, g] : report.by_type.at(name)) {
                out << name << '\t' << slice << '\t';
                detail::write_stats_row(out, g, include_timing);
                out << '\n';
            }
    }
    {
        std::ofstream out(out_dir / "by_ticker.tsv");
        if (!out) throw IoError("cannot write by_ticker.tsv");
        out << "model\ttickers\tcount\tmrr\ttop1\ttop5\ttop10\ttime_ms\tticker_dis\t"
               "concept_dis\n";
        for (const std::string& name : report.model_names)
            for (const auto& [count, g] : report.by_ticker_count.at(name)) {
                out << name << '\t' << count << '\t';
                detail::write_stats_row(out, g, include_timing);
                out << '\n';
            }
    }
    {
        std::ofstream out(out_dir / "records.jsonl");
        if (!out) throw IoError("cannot write records.jsonl");
        for (const EvalRecord& r : report.records) {
            nlohmann::json j = {{"qa_id", r.qa_id},
                                {"model", r.model},
                                {"qtype", to_string(r.qtype)},
                                {"ticker_count", r.ticker_count},
                                {"rank_of_first_gold", r.rank_of_first_gold},
                                {"reciprocal_rank", r.reciprocal_rank},
                                {"hit1", r.hit1},
                                {"hit5", r.hit5},
                                {"hit10", r.hit10},
                                {"ticker_disagreement", r.ticker_disagreement},
                                {"concept_disagreement", r.concept_disagreement}};
            if (include_timing) j["elapsed_ms"] = r.elapsed_ms;
            if (report.strict_multi_gold) j["reciprocal_rank_strict"] = r.reciprocal_rank_strict;
            out << j.dump() << '\n';
        }
    }
    {
        nlohmann::json j;
        j["format_version"] = kReportFormatVersion;
        j["k_max"] = report.k_max;
        j["strict_multi_gold"] = report.strict_multi_gold;
        j["models"] = report.model_names;
        for (const std::string& name : report.model_names) {
            j["overall"][name] = detail::stats_to_json(report.overall.at(name), include_timing,
                                                       report.strict_multi_gold);
            for (const auto& [slice, g] : report.by_type.at(name))
                j["by_type"][name][slice] =
                    detail::stats_to_json(g, include_timing, report.strict_multi_gold);
            for (const auto& [count, g] : report.by_ticker_count.at(name))
                j["by_ticker_count"][name][std::to_string(count)] =
                    detail::stats_to_json(g, include_timing, report.strict_multi_gold);
        }
        std::ofstream out(out_dir / "report.json");
        if (!out) throw IoError("cannot write report.json");
        out << j.dump(2) << '\n';
    }
}

// Per-epoch quantization errors for both SOMs, for external plotting.
inline void export_training_trace(const TrainingTrace& trace1, const TrainingTrace& trace2,
                                  const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write training trace: " + path.string());
    bool timing = trace1.epoch_millis.size() == trace1.quantization_errors.size() &&
                  trace2.epoch_millis.size() == trace2.quantization_errors.size();
    out << "epoch\tsom1_q\tsom2_q";
    if (timing) out << "\tsom1_ms\tsom2_ms";
    out << '\n';
    size_t epochs = std::min(trace1.quantization_errors.size(),
                             trace2.quantization_errors.size());
    for (size_t t = 0; t < epochs; ++t) {
        out << t << '\t' << trace1.quantization_errors[t] << '\t'
            << trace2.quantization_errors[t];
        if (timing) out << '\t' << trace1.epoch_millis[t] << '\t' << trace2.epoch_millis[t];
        out << '\n';
    }
}

}  // namespace caisson
