#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "caisson/evalharness.hpp"
#include "fixtures.hpp"

using namespace caisson;
namespace fs = std::filesystem;

namespace {

struct EvalFixture {
    UniverseConfig universe = fixtures::small_universe();
    std::vector<Note> notes = fixtures::small_corpus(universe, 800, 321);
    RunConfig config = fixtures::small_config();
    IndexedCorpus index = index_corpus(notes, universe, config);
    CaissonModel model = train_model(index_corpus(notes, universe, config), config);
    std::vector<QaPair> qas;

    EvalFixture() { qas = generate_qa(notes, universe, 120, 120, 9).first; }
};

const EvalFixture& shared_eval() {
    static EvalFixture f;
    return f;
}

}  // namespace

TEST_CASE("disagreement hand values") {
    const EvalFixture& f = shared_eval();

    // craft a query and inspect against known notes
    const Note& note = f.notes[0];
    std::string text = "What do analysts say about " + to_lower(*note.concepts.begin()) + " at " +
                       note.ticker_counts.begin()->first + "?";
    ParsedQuery q = parse_query(text, f.universe, *f.index.provider, f.index.ticker_table,
                                f.index.concept_table, f.index.matcher);

    // perfect agreement when every retrieved note matches the query sets
    std::vector<std::string> perfect;
    for (size_t i = 0; i < f.notes.size() && perfect.size() < 3; ++i) {
        const NoteMeta& m = f.index.metas[i];
        if (m.tickers == q.tickers && m.concepts == q.concepts) perfect.push_back(f.notes[i].id);
    }
    if (!perfect.empty()) {
        auto [tdis, cdis] = disagreement(q, perfect, f.index, 10);
        CHECK(tdis == Catch::Approx(0.0).margin(1e-12));
        CHECK(cdis == Catch::Approx(0.0).margin(1e-12));
    }

    // no shared tickers at all -> ticker disagreement 1
    std::vector<std::string> misses;
    for (size_t i = 0; i < f.notes.size() && misses.size() < 3; ++i) {
        const NoteMeta& m = f.index.metas[i];
        bool shares = false;
        for (const std::string& t : q.tickers) shares |= m.tickers.count(t) > 0;
        if (!shares) misses.push_back(f.notes[i].id);
    }
    auto [tdis, cdis] = disagreement(q, misses, f.index, 10);
    CHECK(tdis == Catch::Approx(1.0).margin(1e-12));

    // empty retrieval -> full disagreement
    auto [t0, c0] = disagreement(q, {}, f.index, 10);
    CHECK(t0 == 1.0);
    CHECK(c0 == 1.0);
}

TEST_CASE("disagreement of a mixed top-2 with scores 1.0 and 0.5 is 0.25") {
    const EvalFixture& f = shared_eval();

    // query names two tickers; one retrieved note matches both, one matches one
    std::string exact_id, half_id;
    std::set<std::string> pair;
    for (size_t i = 0; i < f.notes.size() && exact_id.empty(); ++i)
        if (f.index.metas[i].tickers.size() == 2) {
            pair = f.index.metas[i].tickers;
            exact_id = f.notes[i].id;
        }
    REQUIRE(!exact_id.empty());
    for (size_t i = 0; i < f.notes.size() && half_id.empty(); ++i) {
        const auto& t = f.index.metas[i].tickers;
        if (t.size() == 1 && pair.count(*t.begin())) half_id = f.notes[i].id;
    }
    REQUIRE(!half_id.empty());

    auto it = pair.begin();
    std::string query_text = "What's the latest information on " + *it + " and " + *std::next(it) +
                             " regarding fair value?";
    ParsedQuery q = parse_query(query_text, f.universe, *f.index.provider, f.index.ticker_table,
                                f.index.concept_table, f.index.matcher);
    REQUIRE(q.tickers == pair);
    auto [tdis, cdis] = disagreement(q, {exact_id, half_id}, f.index, 10);
    CHECK(tdis == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("reciprocal rank definitions and hit monotonicity") {
    const EvalFixture& f = shared_eval();
    CaissonRetrieverAdapter caisson_model(f.model);
    TextRagRetriever text_rag(f.index);

    EvalOptions options;
    options.k_max = 10;
    options.max_questions = 60;
    EvalReport report = evaluate({&caisson_model, &text_rag}, f.qas, f.index, options);

    REQUIRE(!report.records.empty());
    for (const EvalRecord& r : report.records) {
        if (r.rank_of_first_gold > 0)
            CHECK(r.reciprocal_rank == Catch::Approx(1.0 / r.rank_of_first_gold).margin(1e-12));
        else
            CHECK(r.reciprocal_rank == 0.0);
        CHECK(r.hit1 <= r.hit5);
        CHECK(r.hit5 <= r.hit10);
        CHECK(r.reciprocal_rank >= 0.0);
        CHECK(r.reciprocal_rank <= 1.0);
        // strict variant can never beat the lenient one
        CHECK(r.reciprocal_rank_strict <= r.reciprocal_rank + 1e-12);
    }
    for (const std::string& name : report.model_names) {
        const GroupStats& g = report.overall.at(name);
        CHECK(g.mrr >= 0.0);
        CHECK(g.mrr <= 1.0);
        CHECK(g.top1 <= g.top5);
        CHECK(g.top5 <= g.top10);
    }
}

TEST_CASE("evaluate aborts on gold ids missing from the corpus") {
    const EvalFixture& f = shared_eval();
    CaissonRetrieverAdapter model(f.model);
    std::vector<QaPair> corrupted = {f.qas[0]};
    corrupted[0].gold_note_ids = {"note-999999"};
    CHECK_THROWS_AS(evaluate({&model}, corrupted, f.index), ValidationError);

    CHECK_THROWS_AS(evaluate({&model}, {}, f.index), ValidationError);
    CHECK_THROWS_AS(evaluate({}, f.qas, f.index), ValidationError);
}

TEST_CASE("TextRAG ranks by pure text cosine") {
    const EvalFixture& f = shared_eval();
    TextRagRetriever text_rag(f.index);

    ParsedQuery q = parse_query("What do analysts say about revenue growth at ALPHA?", f.universe,
                                *f.index.provider, f.index.ticker_table, f.index.concept_table,
                                f.index.matcher);
    std::vector<std::string> got = text_rag.retrieve(q, 5);
    REQUIRE(got.size() == 5);

    // independent oracle: top-5 by cosine over text embeddings
    std::vector<std::pair<double, std::string>> scored;
    for (size_t i = 0; i < f.notes.size(); ++i)
        scored.emplace_back(-cosine(q.text_embedding, f.index.metas[i].text_embedding),
                            f.notes[i].id);
    std::sort(scored.begin(), scored.end());
    for (size_t i = 0; i < 5; ++i) CHECK(got[i] == scored[i].second);
}

TEST_CASE("TextEntityRAG filters by query tickers and falls back to the corpus") {
    const EvalFixture& f = shared_eval();
    TextEntityRagRetriever ter(f.index);

    ParsedQuery with_ticker =
        parse_query("What's the latest information on ALPHA regarding fair value?", f.universe,
                    *f.index.provider, f.index.ticker_table, f.index.concept_table,
                    f.index.matcher);
    REQUIRE(with_ticker.tickers == std::set<std::string>{"ALPHA"});
    std::vector<std::string> got = ter.retrieve(with_ticker, 10);
    REQUIRE(!got.empty());
    for (const std::string& id : got) {
        const NoteMeta& m = f.index.metas[f.index.id_index.at(id)];
        CHECK(m.tickers.count("ALPHA") == 1);
    }

    ParsedQuery no_ticker = parse_query("Which companies stand out on fair value?", f.universe,
                                        *f.index.provider, f.index.ticker_table,
                                        f.index.concept_table, f.index.matcher);
    CHECK(no_ticker.tickers.empty());
    CHECK(ter.retrieve(no_ticker, 10).size() == 10);  // full-corpus fallback
}

TEST_CASE("baseline sanity: entity awareness dominates text-only retrieval") {
    const EvalFixture& f = shared_eval();
    TextRagRetriever text_rag(f.index);
    TextEntityRagRetriever ter(f.index);

    int with_tickers = 0;
    for (const QaPair& qa : f.qas) with_tickers += qa.tickers_in_q.empty() ? 0 : 1;
    REQUIRE(with_tickers * 2 >= int(f.qas.size()));  // >= 50% carry a ticker

    EvalOptions options;
    options.max_questions = 240;
    EvalReport report = evaluate({&text_rag, &ter}, f.qas, f.index, options);
    CHECK(report.overall.at("TextEntityRAG").mrr > report.overall.at("TextRAG").mrr);
}

TEST_CASE("stratified sampling caps the evaluated set deterministically") {
    const EvalFixture& f = shared_eval();
    EvalOptions options;
    options.max_questions = 60;
    options.sample_seed = 5;
    std::vector<QaPair> s1 = sample_questions(f.qas, options);
    std::vector<QaPair> s2 = sample_questions(f.qas, options);
    REQUIRE(s1.size() == 60);
    int singles = 0;
    for (const QaPair& qa : s1) singles += qa.qtype == QType::single_hop ? 1 : 0;
    CHECK(singles == 30);
    for (size_t i = 0; i < s1.size(); ++i) CHECK(s1[i].id == s2[i].id);
}

TEST_CASE("report export writes the three tables plus records and json") {
    const EvalFixture& f = shared_eval();
    CaissonRetrieverAdapter caisson_model(f.model);
    TextRagRetriever text_rag(f.index);
    TextEntityRagRetriever ter(f.index);

    EvalOptions options;
    options.max_questions = 80;
    EvalReport report = evaluate({&caisson_model, &text_rag, &ter}, f.qas, f.index, options);

    fs::path dir = fs::temp_directory_path() / "caisson_test_report";
    fs::remove_all(dir);
    report_export(report, dir);

    for (const char* file : {"overall.tsv", "by_type.tsv", "by_ticker.tsv", "records.jsonl",
                             "report.json"})
        CHECK(fs::exists(dir / file));

    // overall.tsv: header + one row per model
    std::ifstream overall(dir / "overall.tsv");
    int lines = 0;
    std::string line;
    while (std::getline(overall, line)) ++lines;
    CHECK(lines == 4);

    // by-ticker slice covers the question complexity range per model
    nlohmann::json rj;
    std::ifstream(dir / "report.json") >> rj;
    for (const std::string& name : report.model_names) {
        CHECK(rj["by_ticker_count"].contains(name));
        CHECK(rj["by_type"][name].contains("single_hop"));
        CHECK(rj["by_type"][name].contains("multi_hop"));
    }

    EvalReport empty;
    CHECK_THROWS_AS(report_export(empty, dir), ValidationError);
}

TEST_CASE("reports are deterministic once timing is excluded") {
    const EvalFixture& f = shared_eval();
    CaissonRetrieverAdapter caisson_model(f.model);
    EvalOptions options;
    options.max_questions = 40;

    fs::path d1 = fs::temp_directory_path() / "caisson_test_rep1";
    fs::path d2 = fs::temp_directory_path() / "caisson_test_rep2";
    fs::remove_all(d1);
    fs::remove_all(d2);
    report_export(evaluate({&caisson_model}, f.qas, f.index, options), d1, false);
    report_export(evaluate({&caisson_model}, f.qas, f.index, options), d2, false);

    for (const char* file : {"overall.tsv", "by_type.tsv", "by_ticker.tsv", "records.jsonl",
                             "report.json"}) {
        std::ifstream f1(d1 / file), f2(d2 / file);
        std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
        std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
        CHECK(s1 == s2);
    }
}

TEST_CASE("training trace export emits one row per epoch") {
    const EvalFixture& f = shared_eval();
    fs::path p = fs::temp_directory_path() / "caisson_test_trace.tsv";
    export_training_trace(f.model.trace1, f.model.trace2, p);
    std::ifstream in(p);
    int lines = 0;
    std::string line;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == f.config.epochs + 1);
}
