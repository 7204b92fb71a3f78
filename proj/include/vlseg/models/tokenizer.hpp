#pragma once

#include <string>
#include <vector>

#include "vlseg/common.hpp"

namespace vlseg::models {

struct Tokenized {
    std::vector<int> ids;  // includes begin/end tokens
    bool truncated = false;
};

// Deterministic word-hash tokenizer. Lowercases, splits on non-alphanumeric
// characters, and buckets each word into the vocabulary by FNV-1a hash.
// Ids 0..2 are reserved for pad/begin/end.
class HashTokenizer {
public:
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;

    HashTokenizer(int vocab_size, int context_len);

    // Truncates word tokens so the result never exceeds the context length.
    Tokenized encode(const std::string& text) const;
    int word_id(const std::string& word) const;

    int vocab_size() const { return vocab_; }
    int context_len() const { return context_; }

private:
    int vocab_;
    int context_;
};

std::vector<std::string> split_words(const std::string& text);

}  // namespace vlseg::models
