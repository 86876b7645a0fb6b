#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "caisson/universe.hpp"
#include "fixtures.hpp"

using namespace caisson;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("caisson_test_" + name);
    fs::remove(p);
    return p;
}

}  // namespace

TEST_CASE("shipped default universe has 24 concepts, 120 tickers, 11 sectors") {
    UniverseConfig u = default_universe();
    CHECK(u.concepts.size() == 24);
    CHECK(u.tickers.size() == 120);
    CHECK(u.sectors.size() == 11);
}

TEST_CASE("committed default config file matches the builtin universe") {
    fs::path shipped = fs::path(CAISSON_SOURCE_DIR) / "configs" / "default_universe.json";
    REQUIRE(fs::exists(shipped));
    UniverseConfig loaded = load_universe(shipped);
    UniverseConfig builtin = default_universe();
    CHECK(universe_to_json(loaded) == universe_to_json(builtin));
    CHECK(universe_hash(loaded) == universe_hash(builtin));
}

TEST_CASE("duplicate ticker symbol is rejected and names the entry") {
    UniverseConfig u = default_universe();
    TickerInfo dup = u.tickers[0];  // AAPL
    u.tickers.push_back(dup);
    try {
        finalize_universe(u);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("AAPL") != std::string::npos);
    }
}

TEST_CASE("unknown sector, bad symbol, bad cap and empty synonyms are rejected") {
    UniverseConfig base = fixtures::small_universe();

    UniverseConfig u = base;
    u.tickers[0].sector = "Cryptocurrency";
    CHECK_THROWS_AS(finalize_universe(u), ValidationError);

    u = base;
    u.tickers[0].symbol = "toolong";
    CHECK_THROWS_AS(finalize_universe(u), ValidationError);

    u = base;
    u.tickers[0].market_cap = -5.0;
    CHECK_THROWS_AS(finalize_universe(u), ValidationError);

    u = base;
    u.concepts[0].synonyms.clear();
    CHECK_THROWS_AS(finalize_universe(u), ValidationError);
}

TEST_CASE("a synonym claimed by two concepts is rejected case-insensitively") {
    UniverseConfig u = fixtures::small_universe();
    u.concepts[1].synonyms.push_back("EARNINGS SURPRISE");  // owned by Earnings beat
    CHECK_THROWS_AS(finalize_universe(u), ValidationError);
}

TEST_CASE("sector_of resolves known symbols and rejects unknown ones") {
    UniverseConfig u = default_universe();
    CHECK(sector_of("AAPL", u) == "Technology");
    CHECK(sector_of("EQR", u) == "Real Estate");
    CHECK_THROWS_AS(sector_of("ZZZZ", u), ValidationError);

    std::set<std::string> sectors(u.sectors.begin(), u.sectors.end());
    for (const TickerInfo& t : u.tickers) CHECK(sectors.count(t.sector) == 1);
}

TEST_CASE("weights are positive and sum to one") {
    UniverseConfig u = default_universe();
    double total = 0.0;
    for (const TickerInfo& t : u.tickers) {
        CHECK(t.weight > 0.0);
        CHECK(t.weight <= 1.0);
        total += t.weight;
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
}

TEST_CASE("load-save-load round trip is stable") {
    UniverseConfig u = default_universe();
    fs::path p1 = temp_file("universe_rt1.json");
    fs::path p2 = temp_file("universe_rt2.json");
    save_universe(u, p1);
    UniverseConfig reloaded = load_universe(p1);
    save_universe(reloaded, p2);

    std::ifstream f1(p1), f2(p2);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    CHECK(universe_to_json(u) == universe_to_json(reloaded));
}

TEST_CASE("malformed and unreadable files raise the right errors") {
    fs::path bad = temp_file("universe_bad.json");
    std::ofstream(bad) << "{not json";
    CHECK_THROWS_AS(load_universe(bad), ParseError);
    CHECK_THROWS_AS(load_universe("/nonexistent/universe.json"), IoError);

    fs::path wrong_version = temp_file("universe_badver.json");
    nlohmann::json j = universe_to_json(default_universe());
    j["format_version"] = 99;
    std::ofstream(wrong_version) << j.dump();
    CHECK_THROWS_AS(load_universe(wrong_version), ValidationError);
}

TEST_CASE("ticker extraction matches whole uppercase tokens only") {
    UniverseConfig u = default_universe();
    auto counts = extract_ticker_counts(
        "GOOGL has gained 18.1% market share. AAPL and GOOGL both moved. Apple is not a token.",
        u);
    CHECK(counts.at("GOOGL") == 2);
    CHECK(counts.at("AAPL") == 1);
    CHECK(counts.size() == 2);

    CHECK(extract_tickers("nothing here", u).empty());
    CHECK(extract_tickers("lowercase aapl is not a ticker", u).empty());
    // embedded in a longer token -> no match
    CHECK(extract_tickers("XAAPLX", u).empty());
}
