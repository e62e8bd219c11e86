#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "semharq/tensor.hpp"

namespace semharq {

struct Vocabulary {
    std::vector<std::string> tokens;  // index == token id
    std::unordered_map<std::string, int> index;
    int pad_id = 0;
    int start_id = 1;
    int end_id = 2;

    std::size_t size() const { return tokens.size(); }
    int id_of(const std::string& word) const;       // throws on out-of-vocabulary words
    const std::string& token(int id) const;         // throws on invalid ids
    bool contains(const std::string& word) const { return index.count(word) != 0; }
};

/// Fixed-length padded token sequence. true_length counts the leading
/// non-pad span; decoded sentences may degenerate to true_length == 0.
struct Sentence {
    std::vector<int> ids;
    std::size_t true_length = 0;

    std::size_t padded_length() const { return ids.size(); }
    bool operator==(const Sentence& other) const = default;
};

/// Maps a token id to its ordered synonym list W_i; the list always starts
/// with the word itself. The originating classes are kept in order so the
/// table serializes reproducibly.
struct SynonymTable {
    std::unordered_map<int, std::vector<int>> lists;
    std::vector<std::vector<int>> classes;
};

/// Frequency-then-lexicographic vocabulary over whitespace tokens, with
/// <pad>/<start>/<end> in the first three slots.
Vocabulary build_vocabulary(const std::vector<std::string>& sentences);

struct SyntheticCorpus {
    std::vector<std::string> sentences;
    std::vector<std::vector<std::string>> synonym_classes;
    Vocabulary vocab;
    SynonymTable table;
};

/// Grammar-generated corpus over ~200 word types grouped into synonym
/// classes of size 1..4. Same-class substitution preserves grammaticality
/// by construction. Lengths are uniform in [len_min, len_max]; the grammar
/// cannot produce sentences shorter than 3 words.
SyntheticCorpus generate_synthetic_corpus(std::uint64_t seed, std::size_t n_sentences,
                                          std::size_t len_min, std::size_t len_max);

/// Category-level membership test for the synthetic grammar, usable as an
/// independent oracle on generated or synonym-substituted sentences.
bool grammar_accepts(const std::vector<std::string>& words);

std::vector<std::string> split_words(const std::string& text);

Sentence tokenize_and_pad(const std::string& text, const Vocabulary& vocab, std::size_t padded_len);
std::string detokenize(const Sentence& sentence, const Vocabulary& vocab);

std::vector<int> synonyms_of(int word_id, const SynonymTable& table);

SynonymTable make_synonym_table(const std::vector<std::vector<std::string>>& classes,
                                const Vocabulary& vocab);

// Plain-text interfaces: one sentence per line; synonym files hold one
// class per line, head word first.
std::vector<std::string> load_corpus_lines(const std::string& path);
void save_corpus_lines(const std::string& path, const std::vector<std::string>& lines);
SynonymTable load_synonym_table(const std::string& path, const Vocabulary& vocab);
void save_synonym_table(const std::string& path, const SynonymTable& table,
                        const Vocabulary& vocab);

}  // namespace semharq
