#pragma once

// Shared test fixtures: a small universe, a fast RunConfig and corpus/model
// builders sized for unit tests.

#include <string>
#include <vector>

#include "caisson/config.hpp"
#include "caisson/notegen.hpp"
#include "caisson/retriever.hpp"
#include "caisson/universe.hpp"

namespace fixtures {

// 12 tickers over 5 sectors, 8 concepts borrowed from the shipped dictionary.
inline caisson::UniverseConfig small_universe() {
    caisson::UniverseConfig defaults = caisson::default_universe();
    caisson::UniverseConfig u;
    u.sectors = defaults.sectors;
    auto add = [&u](const char* sym, const char* sector, double cap) {
        caisson::TickerInfo t;
        t.symbol = sym;
        t.sector = sector;
        t.market_cap = cap;
        u.tickers.push_back(t);
    };
    add("ALPHA", "Technology", 3.0e12);
    add("BRAVO", "Technology", 2.0e12);
    add("CHARM", "Technology", 1.0e12);
    add("DELTA", "Healthcare", 9.0e11);
    add("ECHO", "Healthcare", 8.0e11);
    add("FOX", "Energy", 7.0e11);
    add("GOLF", "Energy", 6.0e11);
    add("HOTEL", "Materials", 5.0e11);
    add("INDIA", "Materials", 4.0e11);
    add("JULIE", "Utilities", 3.0e11);
    add("KILO", "Utilities", 2.5e11);
    add("LIMA", "Technology", 2.0e11);
    for (int i = 0; i < 8; ++i) u.concepts.push_back(defaults.concepts[size_t(i)]);
    caisson::finalize_universe(u);
    return u;
}

// Small dimensions keep unit-test training in the tens of milliseconds.
inline caisson::RunConfig small_config() {
    caisson::RunConfig c;
    c.text_dim = 64;
    c.entity_dim = 16;
    c.som_n = 6;
    c.epochs = 30;
    c.seeds = {11, 22, 33, 44, 55};
    return c;
}

inline std::vector<caisson::Note> small_corpus(const caisson::UniverseConfig& u, int n = 600,
                                               uint64_t seed = 77) {
    return caisson::generate_corpus(u, n, seed).first;
}

inline caisson::CaissonModel small_model(const caisson::UniverseConfig& u,
                                         const std::vector<caisson::Note>& notes) {
    return caisson::build_model(notes, u, small_config());
}

}  // namespace fixtures
