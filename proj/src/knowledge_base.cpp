#include "semharq/knowledge_base.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace semharq {

LocalKnowledgeBase generate_kb(const CodecModel& codec, const ChannelConfig& channel,
                               const std::vector<Sentence>& corpus, std::size_t n_transmissions,
                               std::uint64_t seed, const BleuConfig& bleu_cfg) {
    if (n_transmissions < 1) throw std::invalid_argument("generate_kb: n_transmissions < 1");
    if (corpus.empty()) throw std::invalid_argument("generate_kb: empty corpus");
    channel.validate();

    Rng rng(mix_seed(seed, 0x4B4Bu));
    const double noise_var = noise_variance_from_snr(channel.snr_db);
    const std::size_t n_symbols = codec.config().frame_symbols();

    LocalKnowledgeBase kb;
    kb.meta = {channel.snr_db, seed, n_transmissions};
    kb.k1.reserve(n_transmissions);
    kb.k3.reserve(n_transmissions);
    for (std::size_t i = 0; i < n_transmissions; ++i) {
        const Sentence& s = corpus[rng.uniform_index(corpus.size())];
        const SemanticFrame clean = codec.encode(s);
        const ChannelRealization real = sample_channel(channel, n_symbols, rng);
        const Tensor received = apply_channel(clean.features, real, noise_var);
        const Sentence decoded =
            greedy_decode(codec.decode_distribution(SemanticFrame{received}), 0);
        const double score = bleu(s, decoded, bleu_cfg);
        const int label = kb_label(score);
        kb.k1.push_back({received, label});
        if (label == 0) kb.k2.push_back({clean.features, received});
        kb.k3.push_back({decoded, label});
    }
    return kb;
}

EpochSampler::EpochSampler(std::size_t n, std::uint64_t seed)
    : order_(n), rng_(mix_seed(seed, 0xE69Cu)) {
    if (n == 0) throw std::invalid_argument("EpochSampler: empty part");
    std::iota(order_.begin(), order_.end(), 0);
    rng_.shuffle(order_);
}

std::vector<std::size_t> EpochSampler::next_batch(std::size_t batch_size) {
    if (batch_size == 0 || batch_size > order_.size()) {
        throw std::invalid_argument("EpochSampler: batch size exceeds part size");
    }
    if (cursor_ + batch_size > order_.size()) {
        rng_.shuffle(order_);
        cursor_ = 0;
    }
    std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                   order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + batch_size));
    cursor_ += batch_size;
    return batch;
}

std::vector<std::size_t> sample_minibatch(std::size_t part_size, std::size_t batch_size,
                                          std::uint64_t seed) {
    EpochSampler sampler(part_size, seed);
    return sampler.next_batch(batch_size);
}

namespace {

void write_f32(std::ostream& os, double v) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    unsigned char bytes[4] = {static_cast<unsigned char>(bits & 0xFF),
                              static_cast<unsigned char>((bits >> 8) & 0xFF),
                              static_cast<unsigned char>((bits >> 16) & 0xFF),
                              static_cast<unsigned char>((bits >> 24) & 0xFF)};
    os.write(reinterpret_cast<const char*>(bytes), 4);
}

double read_f32(std::istream& is) {
    unsigned char bytes[4];
    is.read(reinterpret_cast<char*>(bytes), 4);
    if (!is) throw std::runtime_error("kb: truncated payload");
    const std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) |
                               (static_cast<std::uint32_t>(bytes[1]) << 8) |
                               (static_cast<std::uint32_t>(bytes[2]) << 16) |
                               (static_cast<std::uint32_t>(bytes[3]) << 24);
    float f;
    std::memcpy(&f, &bits, 4);
    return static_cast<double>(f);
}

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char bytes[4] = {static_cast<unsigned char>(v & 0xFF),
                              static_cast<unsigned char>((v >> 8) & 0xFF),
                              static_cast<unsigned char>((v >> 16) & 0xFF),
                              static_cast<unsigned char>((v >> 24) & 0xFF)};
    os.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char bytes[4];
    is.read(reinterpret_cast<char*>(bytes), 4);
    if (!is) throw std::runtime_error("kb: truncated payload");
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) |
           (static_cast<std::uint32_t>(bytes[3]) << 24);
}

void write_frame(std::ostream& os, const Tensor& t) {
    for (double v : t.data) write_f32(os, v);
}

Tensor read_frame(std::istream& is, std::size_t rows, std::size_t cols) {
    Tensor t({rows, cols});
    for (double& v : t.data) v = read_f32(is);
    return t;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void save_kb(const std::string& path, const LocalKnowledgeBase& kb) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("kb: cannot open for writing " + path);
    std::size_t rows = 0, cols = 0, padded_len = 0;
    if (!kb.k1.empty()) {
        rows = kb.k1.front().received_frame.rows();
        cols = kb.k1.front().received_frame.cols();
    }
    if (!kb.k3.empty()) padded_len = kb.k3.front().decoded.ids.size();
    os << kKbMagic << "\n"
       << format_double(kb.meta.snr_db) << " " << kb.meta.seed << " " << kb.meta.n_transmissions
       << "\n"
       << kb.k1.size() << " " << kb.k2.size() << " " << kb.k3.size() << " " << rows << " " << cols
       << " " << padded_len << "\n";
    for (const auto& s : kb.k1) write_frame(os, s.received_frame);
    for (const auto& s : kb.k1) os.put(static_cast<char>(s.label));
    for (const auto& s : kb.k2) {
        write_frame(os, s.clean_frame);
        write_frame(os, s.corrupted_frame);
    }
    for (const auto& s : kb.k3) {
        for (int id : s.decoded.ids) write_u32(os, static_cast<std::uint32_t>(id));
        write_u32(os, static_cast<std::uint32_t>(s.decoded.true_length));
    }
    for (const auto& s : kb.k3) os.put(static_cast<char>(s.label));
    if (!os) throw std::runtime_error("kb: write failed " + path);
}

LocalKnowledgeBase load_kb(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("kb: cannot open " + path);
    std::string line;
    if (!std::getline(is, line) || line != kKbMagic) {
        throw std::runtime_error("kb: bad header in " + path);
    }
    LocalKnowledgeBase kb;
    if (!std::getline(is, line)) throw std::runtime_error("kb: missing metadata");
    {
        std::istringstream ls(line);
        ls >> kb.meta.snr_db >> kb.meta.seed >> kb.meta.n_transmissions;
        if (!ls) throw std::runtime_error("kb: malformed metadata");
    }
    std::size_t n1 = 0, n2 = 0, n3 = 0, rows = 0, cols = 0, padded_len = 0;
    if (!std::getline(is, line)) throw std::runtime_error("kb: missing counts");
    {
        std::istringstream ls(line);
        ls >> n1 >> n2 >> n3 >> rows >> cols >> padded_len;
        if (!ls) throw std::runtime_error("kb: malformed counts");
    }
    kb.k1.resize(n1);
    for (auto& s : kb.k1) s.received_frame = read_frame(is, rows, cols);
    for (auto& s : kb.k1) s.label = is.get();
    kb.k2.resize(n2);
    for (auto& s : kb.k2) {
        s.clean_frame = read_frame(is, rows, cols);
        s.corrupted_frame = read_frame(is, rows, cols);
    }
    kb.k3.resize(n3);
    for (auto& s : kb.k3) {
        s.decoded.ids.resize(padded_len);
        for (int& id : s.decoded.ids) id = static_cast<int>(read_u32(is));
        s.decoded.true_length = read_u32(is);
    }
    for (auto& s : kb.k3) s.label = is.get();
    if (!is) throw std::runtime_error("kb: truncated file " + path);
    return kb;
}

}  // namespace semharq
