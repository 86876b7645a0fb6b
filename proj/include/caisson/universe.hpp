#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "caisson/errors.hpp"
#include "caisson/rng.hpp"
#include "caisson/textutil.hpp"

namespace caisson {

inline constexpr int kUniverseFormatVersion = 1;

struct TickerInfo {
    std::string symbol;
    std::string sector;
    double market_cap = 0.0;  // USD
    double weight = 0.0;      // market-cap share, derived at load
};

struct ConceptEntry {
    std::string name;
    std::vector<std::string> synonyms;
};

// The ticker universe and concept dictionary that parameterize corpus
// generation, embeddings and query parsing. Immutable after load.
struct UniverseConfig {
    std::vector<std::string> sectors;
    std::vector<TickerInfo> tickers;
    std::vector<ConceptEntry> concepts;

    std::unordered_map<std::string, size_t> ticker_index;
    std::unordered_map<std::string, size_t> concept_index;  // canonical name -> index

    const TickerInfo& ticker(std::string_view symbol) const {
        auto it = ticker_index.find(std::string(symbol));
        if (it == ticker_index.end())
            throw ValidationError("unknown ticker: " + std::string(symbol));
        return tickers[it->second];
    }

    bool has_ticker(std::string_view symbol) const {
        return ticker_index.count(std::string(symbol)) > 0;
    }

    const ConceptEntry& concept_entry(std::string_view name) const {
        auto it = concept_index.find(std::string(name));
        if (it == concept_index.end())
            throw ValidationError("unknown concept: " + std::string(name));
        return concepts[it->second];
    }

    bool has_concept(std::string_view name) const {
        return concept_index.count(std::string(name)) > 0;
    }
};

inline bool valid_symbol(std::string_view s) {
    if (s.empty() || s.size() > 5) return false;
    for (char c : s)
        if (c < 'A' || c > 'Z') return false;
    return true;
}

// Derives weights, builds the lookup indexes and checks every invariant.
// Error messages name the offending entry.
inline void finalize_universe(UniverseConfig& u) {
    if (u.sectors.size() != 11)
        throw ValidationError("universe must declare exactly 11 sectors, got " +
                              std::to_string(u.sectors.size()));
    std::set<std::string> sector_set(u.sectors.begin(), u.sectors.end());
    if (sector_set.size() != u.sectors.size())
        throw ValidationError("duplicate sector name in sectors list");

    if (u.tickers.empty()) throw ValidationError("universe has no tickers");
    u.ticker_index.clear();
    double total_cap = 0.0;
    for (size_t i = 0; i < u.tickers.size(); ++i) {
        const TickerInfo& t = u.tickers[i];
        if (!valid_symbol(t.symbol))
            throw ValidationError("invalid ticker symbol '" + t.symbol +
                                  "' (expected 1-5 uppercase letters)");
        if (!u.ticker_index.emplace(t.symbol, i).second)
            throw ValidationError("duplicate ticker symbol: " + t.symbol);
        if (!sector_set.count(t.sector))
            throw ValidationError("ticker " + t.symbol + " references unknown sector '" +
                                  t.sector + "'");
        if (!(t.market_cap > 0.0))
            throw ValidationError("ticker " + t.symbol + " must have market_cap > 0");
        total_cap += t.market_cap;
    }
    for (TickerInfo& t : u.tickers) t.weight = t.market_cap / total_cap;

    if (u.concepts.empty()) throw ValidationError("universe has no concepts");
    u.concept_index.clear();
    std::unordered_map<std::string, std::string> phrase_owner;  // lowercased phrase -> concept
    for (size_t i = 0; i < u.concepts.size(); ++i) {
        const ConceptEntry& c = u.concepts[i];
        if (c.name.empty()) throw ValidationError("concept with empty name");
        if (!u.concept_index.emplace(c.name, i).second)
            throw ValidationError("duplicate concept name: " + c.name);
        if (c.synonyms.empty())
            throw ValidationError("concept '" + c.name + "' has an empty synonym list");
        auto claim = [&](const std::string& phrase) {
            std::string key = to_lower(phrase);
            auto [it, inserted] = phrase_owner.emplace(key, c.name);
            if (!inserted && it->second != c.name)
                throw ValidationError("phrase '" + phrase + "' maps to both '" + it->second +
                                      "' and '" + c.name + "'");
        };
        claim(c.name);
        for (const std::string& s : c.synonyms) {
            if (s.empty()) throw ValidationError("concept '" + c.name + "' has an empty synonym");
            claim(s);
        }
    }
}

inline const std::string& sector_of(std::string_view symbol, const UniverseConfig& u) {
    return u.ticker(symbol).sector;
}

// Whole uppercase tokens that are universe symbols, with occurrence counts.
inline std::map<std::string, int> extract_ticker_counts(std::string_view text,
                                                        const UniverseConfig& u) {
    std::map<std::string, int> counts;
    for (const std::string& tok : tokenize_cased(text))
        if (is_upper_token(tok) && u.has_ticker(tok)) ++counts[tok];
    return counts;
}

inline std::set<std::string> extract_tickers(std::string_view text, const UniverseConfig& u) {
    std::set<std::string> out;
    for (auto& [sym, n] : extract_ticker_counts(text, u)) out.insert(sym);
    return out;
}

// --- serialization ---------------------------------------------------------

inline nlohmann::json universe_to_json(const UniverseConfig& u) {
    nlohmann::json j;
    j["format_version"] = kUniverseFormatVersion;
    j["sectors"] = u.sectors;
    nlohmann::json tickers = nlohmann::json::array();
    for (const TickerInfo& t : u.tickers)
        tickers.push_back({{"symbol", t.symbol}, {"sector", t.sector}, {"market_cap", t.market_cap}});
    j["tickers"] = std::move(tickers);
    nlohmann::json concepts = nlohmann::json::array();
    for (const ConceptEntry& c : u.concepts)
        concepts.push_back({{"name", c.name}, {"synonyms", c.synonyms}});
    j["concepts"] = std::move(concepts);
    return j;
}

inline UniverseConfig universe_from_json(const nlohmann::json& j) {
    UniverseConfig u;
    try {
        int version = j.at("format_version").get<int>();
        if (version != kUniverseFormatVersion)
            throw ValidationError("unsupported universe format_version " +
                                  std::to_string(version));
        u.sectors = j.at("sectors").get<std::vector<std::string>>();
        for (const auto& t : j.at("tickers")) {
            TickerInfo info;
            info.symbol = t.at("symbol").get<std::string>();
            info.sector = t.at("sector").get<std::string>();
            info.market_cap = t.at("market_cap").get<double>();
            u.tickers.push_back(std::move(info));
        }
        for (const auto& c : j.at("concepts")) {
            ConceptEntry entry;
            entry.name = c.at("name").get<std::string>();
            entry.synonyms = c.at("synonyms").get<std::vector<std::string>>();
            u.concepts.push_back(std::move(entry));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed universe config: ") + e.what());
    }
    finalize_universe(u);
    return u;
}

inline UniverseConfig load_universe(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open universe config: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("universe config " + path.string() + " is not valid JSON: " + e.what());
    }
    return universe_from_json(j);
}

inline void save_universe(const UniverseConfig& u, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write universe config: " + path.string());
    out << universe_to_json(u).dump(2) << '\n';
}

// Stable digest of the universe content, recorded in corpus manifests.
inline std::string universe_hash(const UniverseConfig& u) {
    uint64_t h = fnv1a64(universe_to_json(u).dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

// --- shipped default -------------------------------------------------------

// 120 large-cap names across 11 sectors. Market caps are synthetic: within a
// sector they decay geometrically and sector totals are sized so that
// market-cap-weighted sampling yields roughly 32% Technology notes, ~9.6%
// Healthcare and ~9.1% Financial Services, with the top name drawn for about
// 5% of ticker slots.
inline UniverseConfig default_universe() {
    struct SectorSpec {
        const char* name;
        double weight;
        std::vector<const char*> symbols;
    };
    const std::vector<SectorSpec> spec = {
        {"Technology",
         0.320,
         {"AAPL", "MSFT", "NVDA", "AVGO", "ORCL", "CRM", "AMD", "ADBE", "CSCO", "ACN",
          "IBM", "INTC", "TXN", "QCOM", "NOW", "INTU", "AMAT", "MU", "LRCX", "PANW"}},
        {"Healthcare",
         0.096,
         {"LLY", "UNH", "JNJ", "ABBV", "MRK", "TMO", "ABT", "DHR", "PFE", "AMGN", "ISRG",
          "GILD", "VRTX", "BMY"}},
        {"Financial Services",
         0.091,
         {"BRKB", "JPM", "BAC", "WFC", "GS", "MS", "SPGI", "AXP", "BLK", "SCHW", "CB",
          "PGR", "MMC", "USB"}},
        {"Consumer Discretionary",
         0.085,
         {"AMZN", "TSLA", "HD", "MCD", "NKE", "LOW", "SBUX", "TJX", "BKNG", "ORLY",
          "ETSY", "YUM"}},
        {"Communication Services",
         0.075,
         {"GOOGL", "META", "NFLX", "TMUS", "VZ", "CMCSA", "DIS", "EA"}},
        {"Industrials",
         0.080,
         {"CAT", "GE", "RTX", "UNP", "HON", "BA", "DE", "LMT", "UPS", "ADP", "ETN", "ITW"}},
        {"Consumer Staples",
         0.067,
         {"COST", "PG", "WMT", "KO", "PEP", "PM", "MDLZ", "MO", "CL", "KMB"}},
        {"Energy",
         0.065,
         {"XOM", "CVX", "COP", "SLB", "EOG", "PXD", "MPC", "PSX", "VLO", "OXY"}},
        {"Utilities", 0.035, {"NEE", "DUK", "SO", "AEP", "SRE", "EXC"}},
        {"Real Estate", 0.031, {"PLD", "AMT", "EQIX", "SPG", "WELL", "EQR"}},
        {"Materials", 0.055, {"LIN", "SHW", "APD", "FCX", "ECL", "NEM", "DOW", "NUE"}},
    };

    constexpr double kTotalCap = 5.0e13;  // ~aggregate S&P 500 market cap
    constexpr double kDecay = 0.85;       // within-sector cap decay

    UniverseConfig u;
    for (const SectorSpec& s : spec) u.sectors.emplace_back(s.name);
    for (const SectorSpec& s : spec) {
        double geo_total = 0.0;
        for (size_t i = 0; i < s.symbols.size(); ++i)
            geo_total += std::pow(kDecay, static_cast<double>(i));
        for (size_t i = 0; i < s.symbols.size(); ++i) {
            TickerInfo t;
            t.symbol = s.symbols[i];
            t.sector = s.name;
            double share = s.weight * std::pow(kDecay, static_cast<double>(i)) / geo_total;
            // round to 0.1B so the shipped file stays tidy
            t.market_cap = std::round(share * kTotalCap / 1e8) * 1e8;
            u.tickers.push_back(std::move(t));
        }
    }

    u.concepts = {
        {"Earnings beat", {"earnings surprise", "beat on earnings", "stronger than expected earnings"}},
        {"Revenue growth", {"sales growth", "top line expansion", "revenue acceleration"}},
        {"Market share gain",
         {"market share", "increased market presence", "competitive position improvement",
          "expanded customer base"}},
        {"Technological disruption",
         {"disruptive innovation", "technology shift", "next generation platform"}},
        {"Price target increase",
         {"price target raised", "raised price target", "higher price objective"}},
        {"Product launch", {"new product introduction", "product rollout", "unveiled a new product"}},
        {"Fair value", {"intrinsic value", "valuation estimate", "fairly valued"}},
        {"Industry rivalry",
         {"competitive intensity", "competitive pressure from peers", "intense competition"}},
        {"Profit margin expansion",
         {"margin improvement", "enhanced operational margins", "operating leverage gains"}},
        {"Upward revision", {"estimate increase", "raised forecasts", "upgraded outlook"}},
        {"Dividend increase", {"dividend hike", "raised its dividend", "higher payout"}},
        {"Share buyback", {"stock repurchase", "buyback program", "repurchase authorization"}},
        {"Cost reduction", {"cost cutting", "expense discipline", "streamlined operations"}},
        {"Guidance raise", {"raised guidance", "lifted its outlook", "improved forward guidance"}},
        {"Debt reduction", {"deleveraging", "paid down debt", "balance sheet repair"}},
        {"Regulatory approval",
         {"regulatory clearance", "agency approval", "green light from regulators"}},
        {"Supply chain improvement",
         {"supply chain normalization", "easing supply constraints", "improved logistics"}},
        {"Acquisition activity", {"announced an acquisition", "merger agreement", "bolt-on deal"}},
        {"Capital expenditure", {"capex program", "capital spending", "investment in capacity"}},
        {"Customer growth", {"user growth", "subscriber additions", "client wins"}},
        {"International expansion",
         {"overseas expansion", "entering new markets", "global footprint growth"}},
        {"Inventory buildup", {"rising inventories", "stockpile increase", "channel inventory growth"}},
        {"Margin pressure", {"margin compression", "cost headwinds", "squeezed profitability"}},
        {"Analyst upgrade", {"rating upgrade", "upgraded to buy", "bullish rating change"}},
    };

    finalize_universe(u);
    return u;
}

}  // namespace caisson
