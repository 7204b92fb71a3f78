#include "vlseg/models/tokenizer.hpp"

#include <cctype>
#include <iostream>

namespace vlseg::models {

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::string current;
    for (char raw : text) {
        const unsigned char c = static_cast<unsigned char>(raw);
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            words.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

HashTokenizer::HashTokenizer(int vocab_size, int context_len) : vocab_(vocab_size), context_(context_len) {
    if (vocab_ < 8) throw Error("vocabulary too small");
    if (context_ < 2) throw Error("context length must fit begin/end tokens");
}

int HashTokenizer::word_id(const std::string& word) const {
    return 3 + static_cast<int>(fnv1a(word) % static_cast<uint64_t>(vocab_ - 3));
}

Tokenized HashTokenizer::encode(const std::string& text) const {
    Tokenized out;
    out.ids.push_back(kBos);
    const auto words = split_words(text);
    const size_t max_words = static_cast<size_t>(context_ - 2);
    for (size_t i = 0; i < words.size() && i < max_words; ++i) out.ids.push_back(word_id(words[i]));
    out.ids.push_back(kEos);
    if (words.size() > max_words) {
        out.truncated = true;
        std::cerr << "[vlseg] warning: prompt truncated from " << words.size() + 2 << " to " << context_
                  << " tokens\n";
    }
    return out;
}

}  // namespace vlseg::models
