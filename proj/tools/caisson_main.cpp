// caisson: corpus generation, dual-SOM training, retrieval, benchmark QA
// generation, evaluation and visualization-data export in one binary.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "caisson/config.hpp"
#include "caisson/embed.hpp"
#include "caisson/errors.hpp"
#include "caisson/evalharness.hpp"
#include "caisson/notegen.hpp"
#include "caisson/retriever.hpp"
#include "caisson/snapshot.hpp"
#include "caisson/som.hpp"
#include "caisson/synfaqa.hpp"
#include "caisson/universe.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;
constexpr int kExitInfeasible = 4;

struct TrainCliOptions {
    std::string universe_path;
    std::string corpus_path;
    std::string out_path;
    std::string config_path;
    caisson::RunConfig config;
    // names of flags the user actually supplied; they override config-file values
    std::vector<std::string> supplied;
};

int cmd_gen_notes(const std::string& universe_path, int n, uint64_t seed,
                  const std::string& out) {
    caisson::UniverseConfig universe = caisson::load_universe(universe_path);
    auto [notes, manifest] = caisson::generate_corpus(universe, n, seed);
    nlohmann::json gen_config = {{"universe", universe_path}, {"n", n}, {"seed", seed}};
    caisson::save_corpus(notes, manifest, out, gen_config);
    std::cout << "wrote " << notes.size() << " notes to " << out << "\n";
    std::cout << "ticker count histogram:";
    for (int i = 0; i < 4; ++i)
        std::cout << " " << (i + 1) << ":" << manifest.ticker_count_histogram[size_t(i)];
    std::cout << "\nsynonym usage rate: " << manifest.synonym_usage_rate << "\n";
    return kExitOk;
}

int cmd_train(TrainCliOptions& opt) {
    if (!opt.config_path.empty()) {
        // config file is the base; explicitly supplied flags win over it
        caisson::RunConfig flags = opt.config;
        caisson::RunConfig merged = caisson::load_run_config(opt.config_path);
        auto supplied = [&](const std::string& name) {
            return std::find(opt.supplied.begin(), opt.supplied.end(), name) !=
                   opt.supplied.end();
        };
        if (supplied("--epochs")) merged.epochs = flags.epochs;
        if (supplied("--grid")) merged.som_n = flags.som_n;
        if (supplied("--alpha1")) merged.alpha1_0 = flags.alpha1_0;
        if (supplied("--alpha2")) merged.alpha2_0 = flags.alpha2_0;
        if (supplied("--som1-seed")) merged.seeds.som1 = flags.seeds.som1;
        if (supplied("--som2-seed")) merged.seeds.som2 = flags.seeds.som2;
        if (supplied("--ticker-seed")) merged.seeds.ticker = flags.seeds.ticker;
        if (supplied("--provider")) merged.provider = flags.provider;
        if (supplied("--sidecar")) merged.sidecar_path = flags.sidecar_path;
        opt.config = merged;
    }
    if (!opt.universe_path.empty()) opt.config.universe_path = opt.universe_path;
    if (opt.config.universe_path.empty())
        throw caisson::ValidationError("train requires --universe or a config with universe_path");
    opt.config.validate();

    caisson::UniverseConfig universe = caisson::load_universe(opt.config.universe_path);
    auto [notes, manifest] = caisson::load_corpus(opt.corpus_path);
    std::cout << "indexing " << notes.size() << " notes\n";
    caisson::IndexedCorpus index = caisson::index_corpus(notes, universe, opt.config);
    std::cout << "training two " << opt.config.som_n << "x" << opt.config.som_n
              << " SOMs, d=" << opt.config.som_dim() << ", " << opt.config.epochs
              << " epochs\n";
    caisson::CaissonModel model = caisson::train_model(std::move(index), opt.config);

    for (size_t t = 0; t < model.trace1.quantization_errors.size(); ++t)
        std::printf("epoch %3zu  Q1=%.6f  Q2=%.6f\n", t, model.trace1.quantization_errors[t],
                    model.trace2.quantization_errors[t]);

    caisson::save_model(model, opt.out_path);
    caisson::export_training_trace(model.trace1, model.trace2, opt.out_path + ".trace.tsv");
    std::cout << "snapshot written to " << opt.out_path << "\n";
    return kExitOk;
}

int cmd_query(const std::string& model_path, const std::string& query_text, int k, int radius,
              bool as_json, const std::string& corpus_path) {
    caisson::CaissonModel model = caisson::load_model(model_path);
    std::map<std::string, std::string> texts;
    if (!corpus_path.empty()) {
        auto [notes, manifest] = caisson::load_corpus(corpus_path);
        for (const caisson::Note& n : notes) texts[n.id] = n.text;
    }
    caisson::ParsedQuery q = caisson::parse_query(query_text, model);
    caisson::RetrievalResult result =
        caisson::retrieve(model, q, k, radius >= 0 ? radius : model.config.radius);

    if (as_json) {
        nlohmann::json j;
        j["query"] = result.query;
        j["tickers"] = q.tickers;
        j["concepts"] = q.concepts;
        j["elapsed_ms"] = result.elapsed_ms;
        j["results"] = nlohmann::json::array();
        for (const caisson::ScoredNote& s : result.ranked) {
            nlohmann::json r = {{"id", s.id},
                                {"final_score", s.final_score},
                                {"ticker_score", s.ticker_score},
                                {"concept_score", s.concept_score},
                                {"semantic_score", s.semantic_score}};
            nlohmann::json paths = nlohmann::json::array();
            if (s.from_som1) paths.push_back("SOM1");
            if (s.from_som2) paths.push_back("SOM2");
            r["source_paths"] = std::move(paths);
            if (texts.count(s.id)) r["text"] = texts[s.id];
            j["results"].push_back(std::move(r));
        }
        std::cout << j.dump(2) << "\n";
        return kExitOk;
    }

    std::cout << "query: " << result.query << "\n";
    std::cout << "tickers:";
    for (const std::string& t : q.tickers) std::cout << " " << t;
    std::cout << "\nconcepts:";
    for (const std::string& c : q.concepts) std::cout << " [" << c << "]";
    std::printf("\n%-12s %-8s %-8s %-8s %-8s %s\n", "id", "final", "ticker", "concept", "semantic",
                "paths");
    for (const caisson::ScoredNote& s : result.ranked) {
        std::string paths = std::string(s.from_som1 ? "SOM1" : "") +
                            (s.from_som1 && s.from_som2 ? "+" : "") +
                            (s.from_som2 ? "SOM2" : "");
        std::printf("%-12s %-8.4f %-8.4f %-8.4f %-8.4f %s\n", s.id.c_str(), s.final_score,
                    s.ticker_score, s.concept_score, s.semantic_score, paths.c_str());
        if (texts.count(s.id)) std::cout << "    " << texts[s.id] << "\n";
    }
    std::printf("elapsed: %.2f ms\n", result.elapsed_ms);
    return kExitOk;
}

int cmd_gen_qa(const std::string& corpus_path, const std::string& universe_path, int n_single,
               int n_multi, uint64_t seed, const std::string& out) {
    caisson::UniverseConfig universe = caisson::load_universe(universe_path);
    auto [notes, manifest] = caisson::load_corpus(corpus_path);
    auto [qas, qa_manifest] = caisson::generate_qa(notes, universe, n_single, n_multi, seed);
    nlohmann::json gen_config = {{"corpus", corpus_path},
                                 {"universe", universe_path},
                                 {"single", n_single},
                                 {"multi", n_multi},
                                 {"seed", seed}};
    caisson::save_qa(qas, qa_manifest, out, gen_config);
    std::cout << "wrote " << qas.size() << " questions to " << out << "\n";
    for (const auto& [type, count] : qa_manifest.counts_by_type)
        std::cout << "  " << type << ": " << count << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& model_path, const std::string& corpus_path,
             const std::string& qa_path, const std::string& out_dir,
             const std::string& baselines, int k, bool strict, uint64_t sample_seed) {
    caisson::CaissonModel model = caisson::load_model(model_path);
    auto [notes, manifest] = caisson::load_corpus(corpus_path);
    std::vector<caisson::QaPair> qas = caisson::load_qa(qa_path);

    // re-index with the model's own provider and config so baselines share
    // the exact document vectors CAISSON was trained on
    caisson::IndexedCorpus index =
        caisson::index_corpus(notes, model.universe, model.config, model.provider);
    if (index.ids.size() != model.note_ids.size())
        throw caisson::ValidationError("corpus does not match the model snapshot");
    for (const std::string& id : model.note_ids)
        if (!index.id_index.count(id))
            throw caisson::ValidationError("model note " + id + " is absent from the corpus");

    caisson::CaissonRetrieverAdapter caisson_model(model);
    caisson::TextRagRetriever text_rag(index);
    caisson::TextEntityRagRetriever text_entity_rag(index);

    std::vector<const caisson::BaselineRetriever*> models{&caisson_model};
    std::stringstream ss(baselines);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "text")
            models.push_back(&text_rag);
        else if (item == "text-entity")
            models.push_back(&text_entity_rag);
        else if (!item.empty())
            throw caisson::ValidationError("unknown baseline '" + item +
                                           "' (expected text, text-entity)");
    }

    caisson::EvalOptions options;
    options.k_max = k;
    options.strict_multi_gold = strict;
    options.sample_seed = sample_seed;
    caisson::EvalReport report = caisson::evaluate(models, qas, index, options);
    caisson::report_export(report, out_dir);
    caisson::save_run_config(model.config, std::filesystem::path(out_dir) / "config.json");

    std::printf("%-16s %8s %8s %8s %8s %10s %10s %10s\n", "model", "mrr", "top1", "top5", "top10",
                "time_ms", "ticker_dis", "concept_dis");
    for (const std::string& name : report.model_names) {
        const caisson::GroupStats& g = report.overall.at(name);
        std::printf("%-16s %8.4f %8.4f %8.4f %8.4f %10.2f %10.4f %10.4f\n", name.c_str(), g.mrr,
                    g.top1, g.top5, g.top10, g.mean_ms, g.ticker_dis, g.concept_dis);
    }
    std::cout << "report written to " << out_dir << "\n";
    return kExitOk;
}

int cmd_viz_export(const std::string& model_path, const std::string& corpus_path,
                   const std::string& out) {
    caisson::CaissonModel model = caisson::load_model(model_path);
    if (!corpus_path.empty()) {
        auto [notes, manifest] = caisson::load_corpus(corpus_path);
        for (const caisson::Note& n : notes)
            if (!model.notes.count(n.id))
                throw caisson::ValidationError("corpus note " + n.id +
                                               " is absent from the model snapshot");
    }

    std::ofstream file(out);
    if (!file) throw caisson::IoError("cannot write viz export: " + out);
    file << "# caisson viz export; config: " << caisson::run_config_to_json(model.config).dump()
         << "\n";
    file << "som\trow\tcol\tdoc_count\ttop_tickers\ttop_industry\ttop_concepts\n";

    auto top_k_joined = [](const std::map<std::string, int>& counts, size_t limit) {
        std::vector<std::pair<std::string, int>> items(counts.begin(), counts.end());
        std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        std::string joined;
        for (size_t i = 0; i < std::min(limit, items.size()); ++i) {
            if (i) joined += "|";
            joined += items[i].first + ":" + std::to_string(items[i].second);
        }
        return joined;
    };

    auto dump_grid = [&](const caisson::SomGrid& grid, int som_id) {
        for (int node = 0; node < grid.cell_count(); ++node) {
            auto [row, col] = grid.grid_pos(node);
            std::map<std::string, int> tickers, sectors, concepts;
            for (const caisson::SomEntry& e : grid.collection(node)) {
                const caisson::NoteMeta& meta = model.meta(e.id);
                for (const std::string& t : meta.tickers) {
                    tickers[t]++;
                    sectors[caisson::sector_of(t, model.universe)]++;
                }
                for (const std::string& c : meta.concepts) concepts[c]++;
            }
            std::string industry;
            if (som_id == 1 && !sectors.empty())
                industry = top_k_joined(sectors, 1);
            std::string concept_labels = som_id == 2 ? top_k_joined(concepts, 3) : "";
            file << som_id << '\t' << row << '\t' << col << '\t'
                 << grid.collection(node).size() << '\t' << top_k_joined(tickers, 3) << '\t'
                 << industry << '\t' << concept_labels << '\n';
        }
    };
    dump_grid(model.som1, 1);
    dump_grid(model.som2, 2);
    std::cout << "viz export written to " << out << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CAISSON: dual-SOM multi-view retrieval engine and SynFAQA benchmark"};
    app.require_subcommand(1);

    // gen-notes
    auto* gen_notes = app.add_subcommand("gen-notes", "generate a synthetic note corpus");
    std::string gn_universe, gn_out;
    int gn_n = 10000;
    uint64_t gn_seed = 1101;
    gen_notes->add_option("--universe", gn_universe, "universe config path")->required();
    gen_notes->add_option("--n", gn_n, "number of notes")->required();
    gen_notes->add_option("--seed", gn_seed, "corpus seed")->required();
    gen_notes->add_option("--out", gn_out, "output corpus path")->required();

    // train
    auto* train = app.add_subcommand("train", "index a corpus and train both SOMs");
    TrainCliOptions tr;
    train->add_option("--universe", tr.universe_path, "universe config path");
    train->add_option("--corpus", tr.corpus_path, "corpus path")->required();
    train->add_option("--out", tr.out_path, "output snapshot path")->required();
    train->add_option("--config", tr.config_path, "run config JSON path");
    train->add_option("--epochs", tr.config.epochs, "training epochs");
    train->add_option("--grid", tr.config.som_n, "SOM grid side");
    train->add_option("--alpha1", tr.config.alpha1_0, "SOM1 initial learning rate");
    train->add_option("--alpha2", tr.config.alpha2_0, "SOM2 initial learning rate");
    train->add_option("--som1-seed", tr.config.seeds.som1, "SOM1 init/shuffle seed");
    train->add_option("--som2-seed", tr.config.seeds.som2, "SOM2 init/shuffle seed");
    train->add_option("--ticker-seed", tr.config.seeds.ticker, "ticker embedding seed");
    train->add_option("--provider", tr.config.provider, "deterministic | external");
    train->add_option("--sidecar", tr.config.sidecar_path, "external embedding sidecar path");

    // query
    auto* query = app.add_subcommand("query", "interactive retrieval against a snapshot");
    std::string q_model, q_text, q_corpus;
    int q_k = 10, q_radius = -1;
    bool q_json = false;
    query->add_option("--model", q_model, "model snapshot path")->required();
    query->add_option("--q", q_text, "query text")->required();
    query->add_option("--k", q_k, "number of results");
    query->add_option("--radius", q_radius, "neighborhood search radius");
    query->add_flag("--json", q_json, "JSON output");
    query->add_option("--corpus", q_corpus, "corpus path (adds note text to output)");

    // gen-qa
    auto* gen_qa = app.add_subcommand("gen-qa", "generate the SynFAQA question set");
    std::string gq_corpus, gq_universe, gq_out;
    int gq_single = 10000, gq_multi = 10000;
    uint64_t gq_seed = 2202;
    gen_qa->add_option("--corpus", gq_corpus, "corpus path")->required();
    gen_qa->add_option("--universe", gq_universe, "universe config path")->required();
    gen_qa->add_option("--single", gq_single, "single-hop question count")->required();
    gen_qa->add_option("--multi", gq_multi, "multi-hop question count")->required();
    gen_qa->add_option("--seed", gq_seed, "QA seed")->required();
    gen_qa->add_option("--out", gq_out, "output QA path")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "benchmark CAISSON against the baselines");
    std::string ev_model, ev_corpus, ev_qa, ev_out;
    std::string ev_baselines = "text,text-entity";
    int ev_k = 10;
    bool ev_strict = false;
    uint64_t ev_sample_seed = 17;
    eval->add_option("--model", ev_model, "model snapshot path")->required();
    eval->add_option("--corpus", ev_corpus, "corpus path")->required();
    eval->add_option("--qa", ev_qa, "QA file path")->required();
    eval->add_option("--out", ev_out, "report output directory")->required();
    eval->add_option("--baselines", ev_baselines, "comma list: text,text-entity");
    eval->add_option("--k", ev_k, "retrieval depth");
    eval->add_flag("--strict-multi-gold", ev_strict, "also require both golds in top-k");
    eval->add_option("--sample-seed", ev_sample_seed, "stratified sampling seed");

    // viz-export
    auto* viz = app.add_subcommand("viz-export", "export per-node summaries for plotting");
    std::string vz_model, vz_corpus, vz_out;
    viz->add_option("--model", vz_model, "model snapshot path")->required();
    viz->add_option("--corpus", vz_corpus, "corpus path (optional cross-check)");
    viz->add_option("--out", vz_out, "output table path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (gen_notes->parsed()) return cmd_gen_notes(gn_universe, gn_n, gn_seed, gn_out);
        if (train->parsed()) {
            for (const char* name : {"--epochs", "--grid", "--alpha1", "--alpha2", "--som1-seed",
                                     "--som2-seed", "--ticker-seed", "--provider", "--sidecar"})
                if (train->count(name) > 0) tr.supplied.emplace_back(name);
            return cmd_train(tr);
        }
        if (query->parsed()) return cmd_query(q_model, q_text, q_k, q_radius, q_json, q_corpus);
        if (gen_qa->parsed())
            return cmd_gen_qa(gq_corpus, gq_universe, gq_single, gq_multi, gq_seed, gq_out);
        if (eval->parsed())
            return cmd_eval(ev_model, ev_corpus, ev_qa, ev_out, ev_baselines, ev_k, ev_strict,
                            ev_sample_seed);
        if (viz->parsed()) return cmd_viz_export(vz_model, vz_corpus, vz_out);
    } catch (const caisson::InfeasibleError& e) {
        std::cerr << "error (infeasible): " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const caisson::IoError& e) {
        std::cerr << "error (io): " << e.what() << "\n";
        return kExitIo;
    } catch (const caisson::ParseError& e) {
        std::cerr << "error (parse): " << e.what() << "\n";
        return kExitValidation;
    } catch (const caisson::ValidationError& e) {
        std::cerr << "error (validation): " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
