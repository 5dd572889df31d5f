#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vloc/cpg/graph.hpp"

namespace vloc::embed {

VLOC_DEFINE_ERROR(EmptyCorpus);

inline constexpr int kPad = 0;
inline constexpr int kUnk = 1;
inline constexpr int kGraph = 2;

/// Maps a raw code token to its vocabulary form: integer literals become a
/// magnitude bucket (NUM_0, NUM_1, NUM_SMALL, NUM_MED, NUM_LARGE, NUM_NEG),
/// string literals become STR, everything else is unchanged.
std::string normalize_token(std::string_view raw);

class Vocab {
  public:
    /// Counts normalized tokens over the sequences; tokens seen fewer than
    /// `min_count` times are left out. Order: reserved entries, then by
    /// descending count, ties by text.
    static Vocab build(std::span<const std::vector<std::string>> sequences, int min_count);
    static Vocab from_tokens(std::vector<std::string> tokens, int min_count);

    /// Index of a raw token (normalized first); <UNK> when absent.
    int index(std::string_view raw) const;
    const std::string& token(int i) const { return tokens_.at(static_cast<std::size_t>(i)); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    std::size_t size() const { return tokens_.size(); }
    int min_count() const { return min_count_; }

    friend bool operator==(const Vocab& a, const Vocab& b) {
        return a.tokens_ == b.tokens_ && a.min_count_ == b.min_count_;
    }

  private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
    int min_count_ = 1;
};

/// Token texts of a graph's non-dummy nodes in id (pre-order) order.
std::vector<std::string> token_sequence(const cpg::CodeGraph& g);
std::vector<std::vector<std::string>> token_sequences(std::span<const cpg::Sample> samples);

} // namespace vloc::embed
