#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace caisson {

inline bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Lowercased alphanumeric runs. "GOOGL gained 18.1%" -> {googl, gained, 18, 1}.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        if (is_word_char(c)) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

// Tokens in original case, for ticker extraction (tickers must be matched as
// whole uppercase tokens, so case is significant).
inline std::vector<std::string> tokenize_cased(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        if (is_word_char(c)) {
            cur.push_back(c);
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

inline bool is_upper_token(std::string_view tok) {
    if (tok.empty() || tok.size() > 5) return false;
    for (char c : tok)
        if (c < 'A' || c > 'Z') return false;
    return true;
}

// Sentence terminators are '.', '!' and '?', except a '.' between two digits
// (decimal point, e.g. "18.1%").
inline int count_sentences(std::string_view text) {
    int count = 0;
    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '!' || c == '?') {
            ++count;
        } else if (c == '.') {
            bool digit_before = i > 0 && std::isdigit(static_cast<unsigned char>(text[i - 1]));
            bool digit_after =
                i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1]));
            if (!(digit_before && digit_after)) ++count;
        }
    }
    return count;
}

// First decimal number in the text; notes always surface their metrics as
// "<value>%" figures, which SynFAQA uses to ground comparison answers.
inline std::optional<double> first_number(std::string_view text) {
    for (size_t i = 0; i < text.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(text[i]))) {
            size_t end = i;
            while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
            if (end < text.size() && text[end] == '.' && end + 1 < text.size() &&
                std::isdigit(static_cast<unsigned char>(text[end + 1]))) {
                ++end;
                while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end])))
                    ++end;
            }
            return std::stod(std::string(text.substr(i, end - i)));
        }
    }
    return std::nullopt;
}

}  // namespace caisson
