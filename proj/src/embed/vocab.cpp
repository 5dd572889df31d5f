#include "vloc/embed/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace vloc::embed {

namespace {

const std::vector<std::string> kReserved = {"<PAD>", "<UNK>", std::string(cpg::kGraphToken)};

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

bool is_hex(std::string_view s) {
    return s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X') &&
           std::all_of(s.begin() + 2, s.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
}

std::string magnitude_bucket(std::string_view digits, int base) {
    // saturate instead of overflowing on long literals
    unsigned long long v = 0;
    for (char c : digits) {
        const int d = std::isdigit(static_cast<unsigned char>(c)) ? c - '0' : std::tolower(c) - 'a' + 10;
        v = v * static_cast<unsigned>(base) + static_cast<unsigned>(d);
        if (v >= 256) return "NUM_LARGE";
    }
    if (v == 0) return "NUM_0";
    if (v == 1) return "NUM_1";
    if (v <= 9) return "NUM_SMALL";
    return "NUM_MED";
}

} // namespace

std::string normalize_token(std::string_view raw) {
    if (raw.size() >= 2 && raw.front() == '"') return "STR";
    if (raw.size() >= 2 && raw.front() == '-' && (all_digits(raw.substr(1)) || is_hex(raw.substr(1))))
        return "NUM_NEG";
    if (all_digits(raw)) return magnitude_bucket(raw, 10);
    if (is_hex(raw)) return magnitude_bucket(raw.substr(2), 16);
    return std::string(raw);
}

Vocab Vocab::build(std::span<const std::vector<std::string>> sequences, int min_count) {
    if (sequences.empty()) throw EmptyCorpus("no samples to build a vocabulary from");
    std::map<std::string, long, std::less<>> counts;
    for (const auto& seq : sequences)
        for (const auto& t : seq) ++counts[normalize_token(t)];
    std::vector<std::pair<std::string, long>> kept;
    for (auto& [tok, n] : counts)
        if (n >= min_count && std::find(kReserved.begin(), kReserved.end(), tok) == kReserved.end())
            kept.emplace_back(tok, n);
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> tokens = kReserved;
    for (auto& [tok, n] : kept) tokens.push_back(tok);
    return from_tokens(std::move(tokens), min_count);
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens, int min_count) {
    if (tokens.size() < kReserved.size() || !std::equal(kReserved.begin(), kReserved.end(), tokens.begin()))
        throw Error("MalformedVocab", "reserved entries missing");
    Vocab v;
    v.tokens_ = std::move(tokens);
    v.min_count_ = min_count;
    for (std::size_t i = 0; i < v.tokens_.size(); ++i)
        if (!v.index_.emplace(v.tokens_[i], static_cast<int>(i)).second)
            throw Error("MalformedVocab", "duplicate token '" + v.tokens_[i] + "'");
    return v;
}

int Vocab::index(std::string_view raw) const {
    if (raw == cpg::kGraphToken) return kGraph;
    auto it = index_.find(normalize_token(raw));
    return it == index_.end() ? kUnk : it->second;
}

std::vector<std::string> token_sequence(const cpg::CodeGraph& g) {
    std::vector<std::string> out;
    for (std::size_t i = 1; i < g.nodes.size(); ++i)
        out.insert(out.end(), g.nodes[i].tokens.begin(), g.nodes[i].tokens.end());
    return out;
}

std::vector<std::vector<std::string>> token_sequences(std::span<const cpg::Sample> samples) {
    std::vector<std::vector<std::string>> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(token_sequence(s.graph));
    return out;
}

} // namespace vloc::embed
