#include "semharq/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace semharq {

int Vocabulary::id_of(const std::string& word) const {
    auto it = index.find(word);
    if (it == index.end()) throw std::invalid_argument("vocabulary: unknown word '" + word + "'");
    return it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens.size()) {
        throw std::invalid_argument("vocabulary: invalid token id " + std::to_string(id));
    }
    return tokens[static_cast<std::size_t>(id)];
}

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::istringstream is(text);
    std::string w;
    while (is >> w) words.push_back(w);
    return words;
}

Vocabulary build_vocabulary(const std::vector<std::string>& sentences) {
    if (sentences.empty()) throw std::invalid_argument("build_vocabulary: empty corpus");
    std::map<std::string, std::size_t> freq;
    for (const auto& line : sentences) {
        for (const auto& w : split_words(line)) ++freq[w];
    }
    if (freq.empty()) throw std::invalid_argument("build_vocabulary: corpus has no tokens");

    std::vector<std::pair<std::string, std::size_t>> ordered(freq.begin(), freq.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary vocab;
    vocab.tokens = {"<pad>", "<start>", "<end>"};
    for (const auto& [word, count] : ordered) vocab.tokens.push_back(word);
    for (std::size_t i = 0; i < vocab.tokens.size(); ++i)
        vocab.index[vocab.tokens[i]] = static_cast<int>(i);
    return vocab;
}

namespace {

enum class Cat { Det, Adj, Noun, Verb, Adv, Prep, Unknown };

Cat category_of(const std::string& word) {
    if (word.rfind("det", 0) == 0) return Cat::Det;
    if (word.rfind("adj", 0) == 0) return Cat::Adj;
    if (word.rfind("nou", 0) == 0) return Cat::Noun;
    if (word.rfind("vrb", 0) == 0) return Cat::Verb;
    if (word.rfind("adv", 0) == 0) return Cat::Adv;
    if (word.rfind("prp", 0) == 0) return Cat::Prep;
    return Cat::Unknown;
}

struct Inventory {
    std::vector<std::vector<std::string>> det, adj, nou, vrb, adv, prp;
};

std::vector<std::vector<std::string>> make_classes(const char* prefix, std::size_t n_classes,
                                                   bool content, Rng& rng) {
    std::vector<std::vector<std::string>> classes(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::size_t size = 1;
        if (content) size = rng.uniform() < 0.1 ? 1 : 2 + rng.uniform_index(3);
        for (std::size_t m = 0; m < size; ++m) {
            std::ostringstream os;
            os << prefix << (c < 10 ? "0" : "") << c << static_cast<char>('a' + m);
            classes[c].push_back(os.str());
        }
    }
    return classes;
}

Inventory make_inventory(Rng& rng) {
    Inventory inv;
    inv.det = make_classes("det", 3, false, rng);
    inv.prp = make_classes("prp", 4, false, rng);
    inv.adj = make_classes("adj", 18, true, rng);
    inv.nou = make_classes("nou", 28, true, rng);
    inv.vrb = make_classes("vrb", 20, true, rng);
    inv.adv = make_classes("adv", 9, true, rng);
    return inv;
}

std::string pick_word(const std::vector<std::vector<std::string>>& classes, Rng& rng) {
    const auto& cls = classes[rng.uniform_index(classes.size())];
    return cls[rng.uniform_index(cls.size())];
}

// Sentence shape: NP Verb (Adv | NP)? PP*, NP = Det Adj{0..2} Noun,
// PP = Prep NP.
struct SentencePlan {
    std::size_t subject_adj = 0;
    bool use_adv = false;
    bool use_object = false;
    std::size_t object_adj = 0;
    std::vector<std::size_t> pp_adj;

    std::size_t length() const {
        std::size_t n = (2 + subject_adj) + 1 + (use_adv ? 1 : 0);
        if (use_object) n += 2 + object_adj;
        for (std::size_t a : pp_adj) n += 3 + a;
        return n;
    }
};

bool try_plan(std::size_t target, SentencePlan& plan, Rng& rng) {
    plan = SentencePlan{};
    plan.subject_adj = rng.uniform_index(3);
    const std::uint64_t tail = rng.uniform_index(3);
    if (tail == 1) {
        plan.use_adv = plan.length() + 1 <= target;
    } else if (tail == 2) {
        const std::size_t obj_adj = rng.uniform_index(3);
        if (plan.length() + 2 + obj_adj <= target) {
            plan.use_object = true;
            plan.object_adj = obj_adj;
        }
    }
    while (plan.length() < target) {
        const std::size_t pp_adj = rng.uniform_index(3);
        if (plan.length() + 3 + pp_adj > target) return false;
        plan.pp_adj.push_back(pp_adj);
    }
    return plan.length() == target;
}

void emit_np(std::vector<std::string>& out, std::size_t n_adj, const Inventory& inv, Rng& rng) {
    out.push_back(pick_word(inv.det, rng));
    for (std::size_t i = 0; i < n_adj; ++i) out.push_back(pick_word(inv.adj, rng));
    out.push_back(pick_word(inv.nou, rng));
}

std::vector<std::string> generate_sentence(std::size_t target, const Inventory& inv, Rng& rng) {
    SentencePlan plan;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        if (!try_plan(target, plan, rng)) continue;
        std::vector<std::string> out;
        emit_np(out, plan.subject_adj, inv, rng);
        out.push_back(pick_word(inv.vrb, rng));
        if (plan.use_adv) out.push_back(pick_word(inv.adv, rng));
        if (plan.use_object) emit_np(out, plan.object_adj, inv, rng);
        for (std::size_t pp : plan.pp_adj) {
            out.push_back(pick_word(inv.prp, rng));
            emit_np(out, pp, inv, rng);
        }
        return out;
    }
    throw std::runtime_error("generate_sentence: no structure for target length " +
                             std::to_string(target));
}

std::string join_words(const std::vector<std::string>& words) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) out += ' ';
        out += words[i];
    }
    return out;
}

}  // namespace

bool grammar_accepts(const std::vector<std::string>& words) {
    std::size_t pos = 0;
    const auto peek = [&]() { return pos < words.size() ? category_of(words[pos]) : Cat::Unknown; };
    const auto accept_np = [&]() {
        if (peek() != Cat::Det) return false;
        ++pos;
        while (peek() == Cat::Adj) ++pos;
        if (peek() != Cat::Noun) return false;
        ++pos;
        return true;
    };
    if (!accept_np()) return false;
    if (peek() != Cat::Verb) return false;
    ++pos;
    if (peek() == Cat::Adv) {
        ++pos;
    } else if (peek() == Cat::Det) {
        if (!accept_np()) return false;
    }
    while (peek() == Cat::Prep) {
        ++pos;
        if (!accept_np()) return false;
    }
    return pos == words.size();
}

SyntheticCorpus generate_synthetic_corpus(std::uint64_t seed, std::size_t n_sentences,
                                          std::size_t len_min, std::size_t len_max) {
    if (n_sentences == 0) throw std::invalid_argument("generate_synthetic_corpus: n_sentences");
    if (len_min < 3 || len_min > len_max) {
        throw std::invalid_argument(
            "generate_synthetic_corpus: length range must satisfy 3 <= min <= max");
    }
    Rng rng(mix_seed(seed, 0xC047u));
    const Inventory inv = make_inventory(rng);

    SyntheticCorpus corpus;
    corpus.sentences.reserve(n_sentences);
    for (std::size_t i = 0; i < n_sentences; ++i) {
        const std::size_t target = len_min + rng.uniform_index(len_max - len_min + 1);
        corpus.sentences.push_back(join_words(generate_sentence(target, inv, rng)));
    }
    for (const auto* group : {&inv.det, &inv.prp, &inv.adj, &inv.nou, &inv.vrb, &inv.adv}) {
        for (const auto& cls : *group) corpus.synonym_classes.push_back(cls);
    }
    corpus.vocab = build_vocabulary(corpus.sentences);
    corpus.table = make_synonym_table(corpus.synonym_classes, corpus.vocab);
    return corpus;
}

Sentence tokenize_and_pad(const std::string& text, const Vocabulary& vocab,
                          std::size_t padded_len) {
    const auto words = split_words(text);
    if (words.empty()) throw std::invalid_argument("tokenize_and_pad: empty sentence");
    if (words.size() > padded_len) {
        throw std::invalid_argument("tokenize_and_pad: sentence longer than padded length");
    }
    Sentence s;
    s.ids.assign(padded_len, vocab.pad_id);
    for (std::size_t i = 0; i < words.size(); ++i) s.ids[i] = vocab.id_of(words[i]);
    s.true_length = words.size();
    return s;
}

std::string detokenize(const Sentence& sentence, const Vocabulary& vocab) {
    std::string out;
    for (int id : sentence.ids) {
        const std::string& tok = vocab.token(id);
        if (id == vocab.pad_id) continue;
        if (!out.empty()) out += ' ';
        out += tok;
    }
    return out;
}

std::vector<int> synonyms_of(int word_id, const SynonymTable& table) {
    auto it = table.lists.find(word_id);
    if (it == table.lists.end()) return {word_id};
    return it->second;
}

SynonymTable make_synonym_table(const std::vector<std::vector<std::string>>& classes,
                                const Vocabulary& vocab) {
    SynonymTable table;
    for (const auto& cls : classes) {
        std::vector<int> ids;
        for (const auto& w : cls) {
            if (vocab.contains(w)) ids.push_back(vocab.index.at(w));
        }
        if (ids.empty()) continue;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            std::vector<int> list{ids[i]};
            for (std::size_t j = 0; j < ids.size(); ++j) {
                if (j != i) list.push_back(ids[j]);
            }
            table.lists[ids[i]] = std::move(list);
        }
        table.classes.push_back(std::move(ids));
    }
    return table;
}

std::vector<std::string> load_corpus_lines(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("corpus: cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

void save_corpus_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("corpus: cannot open for writing " + path);
    for (const auto& l : lines) os << l << "\n";
    if (!os) throw std::runtime_error("corpus: write failed " + path);
}

SynonymTable load_synonym_table(const std::string& path, const Vocabulary& vocab) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("synonym table: cannot open " + path);
    std::vector<std::vector<std::string>> classes;
    std::string line;
    while (std::getline(is, line)) {
        auto words = split_words(line);
        if (!words.empty()) classes.push_back(std::move(words));
    }
    return make_synonym_table(classes, vocab);
}

void save_synonym_table(const std::string& path, const SynonymTable& table,
                        const Vocabulary& vocab) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("synonym table: cannot open for writing " + path);
    for (const auto& cls : table.classes) {
        for (std::size_t i = 0; i < cls.size(); ++i) {
            if (i) os << ' ';
            os << vocab.token(cls[i]);
        }
        os << "\n";
    }
    if (!os) throw std::runtime_error("synonym table: write failed " + path);
}

}  // namespace semharq
