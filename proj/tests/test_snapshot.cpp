#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "caisson/snapshot.hpp"
#include "fixtures.hpp"

using namespace caisson;
namespace fs = std::filesystem;

namespace {

struct SnapshotFixture {
    UniverseConfig universe = fixtures::small_universe();
    std::vector<Note> notes = fixtures::small_corpus(universe, 500, 2718);
    CaissonModel model = fixtures::small_model(universe, notes);
};

const SnapshotFixture& shared_snapshot() {
    static SnapshotFixture f;
    return f;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("snapshot round trip answers queries identically") {
    const SnapshotFixture& f = shared_snapshot();
    fs::path p = fs::temp_directory_path() / "caisson_test_model.bin";
    save_model(f.model, p);
    CaissonModel loaded = load_model(p);

    CHECK(loaded.note_ids == f.model.note_ids);
    CHECK(loaded.som1.raw_weights() == f.model.som1.raw_weights());
    CHECK(loaded.som2.raw_weights() == f.model.som2.raw_weights());
    CHECK(loaded.trace1.quantization_errors == f.model.trace1.quantization_errors);

    // 100 random queries produce identical rankings and scores
    Rng rng(31337);
    for (int trial = 0; trial < 100; ++trial) {
        const Note& note = f.notes[rng.bounded(uint32_t(f.notes.size()))];
        std::string text = "What's the latest information on " +
                           note.ticker_counts.begin()->first + " regarding " +
                           to_lower(*note.concepts.begin()) + "?";
        ParsedQuery q1 = parse_query(text, f.model);
        ParsedQuery q2 = parse_query(text, loaded);
        RetrievalResult r1 = retrieve(f.model, q1, 10, 1);
        RetrievalResult r2 = retrieve(loaded, q2, 10, 1);
        REQUIRE(r1.ranked.size() == r2.ranked.size());
        for (size_t i = 0; i < r1.ranked.size(); ++i) {
            CHECK(r1.ranked[i].id == r2.ranked[i].id);
            CHECK(r1.ranked[i].final_score == r2.ranked[i].final_score);
        }
    }
}

TEST_CASE("same seeds produce byte-identical snapshots") {
    const SnapshotFixture& f = shared_snapshot();
    CaissonModel rebuilt = fixtures::small_model(f.universe, f.notes);

    fs::path p1 = fs::temp_directory_path() / "caisson_test_model_a.bin";
    fs::path p2 = fs::temp_directory_path() / "caisson_test_model_b.bin";
    save_model(f.model, p1);
    save_model(rebuilt, p2);
    CHECK(file_bytes(p1) == file_bytes(p2));
}

TEST_CASE("snapshot loader rejects bad magic, version and truncation") {
    const SnapshotFixture& f = shared_snapshot();
    fs::path p = fs::temp_directory_path() / "caisson_test_model_bad.bin";

    std::ofstream(p, std::ios::binary) << "WRONGMAGICxxxxxxxxxxx";
    CHECK_THROWS_AS(load_model(p), ParseError);

    save_model(f.model, p);
    std::string bytes = file_bytes(p);
    // flip the version field (bytes 8..11)
    bytes[8] = 99;
    std::ofstream(p, std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_model(p), ValidationError);

    // truncate mid-stream
    save_model(f.model, p);
    bytes = file_bytes(p);
    bytes.resize(bytes.size() / 2);
    std::ofstream(p, std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_model(p), IoError);

    CHECK_THROWS_AS(load_model("/nonexistent/model.bin"), IoError);
}

TEST_CASE("loaded model preserves note metadata") {
    const SnapshotFixture& f = shared_snapshot();
    fs::path p = fs::temp_directory_path() / "caisson_test_model_meta.bin";
    save_model(f.model, p);
    CaissonModel loaded = load_model(p);

    for (const Note& note : f.notes) {
        const NoteMeta& a = f.model.meta(note.id);
        const NoteMeta& b = loaded.meta(note.id);
        CHECK(a.tickers == b.tickers);
        CHECK(a.concepts == b.concepts);
        CHECK(a.text_embedding == b.text_embedding);
    }

    // storage partition survives the round trip
    size_t stored = 0;
    for (int node = 0; node < loaded.som1.cell_count(); ++node)
        stored += loaded.som1.collection(node).size();
    CHECK(stored == f.notes.size());
}
