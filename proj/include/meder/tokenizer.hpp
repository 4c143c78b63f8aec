#pragma once

// WordPiece-style subword vocabulary: merge-based induction from a word
// corpus and greedy longest-match encoding with "##" continuation pieces.

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "meder/errors.hpp"
#include "meder/unicode.hpp"

namespace meder {

using TokenId = int;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr TokenId kClsId = 2;
inline constexpr TokenId kSepId = 3;
inline constexpr std::string_view kContinuation = "##";

class Vocab {
 public:
  Vocab() : Vocab(std::vector<std::string>{}) {}

  /// Builds from the non-special tokens; specials are prepended.
  explicit Vocab(const std::vector<std::string>& tokens) {
    for (const char* s : {"[PAD]", "[UNK]", "[CLS]", "[SEP]"}) push(s);
    for (const auto& t : tokens) push(t);
  }

  static Vocab load(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
    static const char* kSpecials[] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
    if (lines.size() < 4) throw DataError("vocab file: fewer than four special tokens");
    for (int i = 0; i < 4; ++i)
      if (lines[i] != kSpecials[i])
        throw DataError("vocab file: line " + std::to_string(i + 1) + " must be " + kSpecials[i]);
    for (std::size_t i = 4; i < lines.size(); ++i)
      if (lines[i].empty()) throw DataError("vocab file: empty token at line " + std::to_string(i + 1));
    return Vocab(std::vector<std::string>(lines.begin() + 4, lines.end()));
  }

  static Vocab load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open vocab file: " + path);
    return load(in);
  }

  void save(std::ostream& out) const {
    for (const auto& t : tokens_) out << t << '\n';
  }

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }

  bool contains(std::string_view t) const { return index_.count(std::string(t)) != 0; }

  std::optional<TokenId> find(std::string_view t) const {
    auto it = index_.find(std::string(t));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  TokenId id(std::string_view t) const {
    auto it = index_.find(std::string(t));
    return it == index_.end() ? kUnkId : it->second;
  }

  std::size_t max_piece_chars() const { return max_piece_chars_; }

  static bool is_special(TokenId id) { return id >= 0 && id < 4; }

  bool operator==(const Vocab& o) const { return tokens_ == o.tokens_; }

 private:
  void push(const std::string& t) {
    if (!index_.emplace(t, static_cast<TokenId>(tokens_.size())).second)
      throw DataError("vocab: duplicate token '" + t + "'");
    tokens_.push_back(t);
    std::string_view body = t;
    if (body.substr(0, 2) == kContinuation) body.remove_prefix(2);
    if (tokens_.size() > 4)
      max_piece_chars_ = std::max(max_piece_chars_, unicode::length(body));
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t max_piece_chars_ = 0;
};

/// Induces a vocabulary: specials, every character seen at least `min_freq`
/// times (word-initial plain, word-internal as "##c"), then merged pieces in
/// order of descending pair frequency until `target_size` is reached or no
/// pair occurs `min_freq` times. Ties go to the lexicographically smallest
/// (left, right) pair.
inline Vocab train_vocab(const std::vector<std::vector<std::string>>& corpus, std::size_t target_size,
                         std::size_t min_freq) {
  if (min_freq < 1) min_freq = 1;
  std::map<std::string, std::size_t> word_freq;
  for (const auto& words : corpus)
    for (const auto& w : words)
      if (!w.empty()) ++word_freq[w];

  std::vector<std::string> symbol_text;
  std::unordered_map<std::string, int> symbol_id;
  auto intern = [&](const std::string& s) {
    auto [it, fresh] = symbol_id.emplace(s, static_cast<int>(symbol_text.size()));
    if (fresh) symbol_text.push_back(s);
    return it->second;
  };

  struct Word {
    std::vector<int> symbols;
    std::size_t freq;
  };
  std::vector<Word> words;
  std::map<std::string, std::size_t> char_freq;
  for (const auto& [w, f] : word_freq) {
    Word word{{}, f};
    bool first = true;
    for (auto& ch : unicode::split_chars(w)) {
      std::string piece = first ? ch : std::string(kContinuation) + ch;
      first = false;
      char_freq[piece] += f;
      word.symbols.push_back(intern(piece));
    }
    words.push_back(std::move(word));
  }

  std::vector<std::string> alphabet;
  for (const auto& [piece, f] : char_freq)
    if (f >= min_freq) alphabet.push_back(piece);
  if (target_size < 4 + alphabet.size())
    throw UsageError("train_vocab: target_size " + std::to_string(target_size) +
                     " is smaller than 4 specials + " + std::to_string(alphabet.size()) +
                     " alphabet symbols");

  std::vector<std::string> pieces = alphabet;
  std::vector<bool> in_vocab(symbol_text.size(), false);
  for (const auto& a : alphabet) in_vocab[static_cast<std::size_t>(symbol_id[a])] = true;
  std::unordered_map<std::string, bool> present;
  for (const auto& a : alphabet) present[a] = true;

  auto key = [](int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
  };
  while (4 + pieces.size() < target_size) {
    std::unordered_map<std::uint64_t, std::size_t> pair_freq;
    for (const auto& w : words)
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
        const int a = w.symbols[i], b = w.symbols[i + 1];
        if (in_vocab[static_cast<std::size_t>(a)] && in_vocab[static_cast<std::size_t>(b)])
          pair_freq[key(a, b)] += w.freq;
      }
    int best_a = -1, best_b = -1;
    std::size_t best_f = 0;
    for (const auto& [k, f] : pair_freq) {
      const int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
      bool better = f > best_f;
      if (!better && f == best_f && best_a >= 0) {
        const auto& sa = symbol_text[static_cast<std::size_t>(a)];
        const auto& sb = symbol_text[static_cast<std::size_t>(b)];
        const auto& ba = symbol_text[static_cast<std::size_t>(best_a)];
        const auto& bb = symbol_text[static_cast<std::size_t>(best_b)];
        better = sa < ba || (sa == ba && sb < bb);
      }
      if (better) {
        best_a = a;
        best_b = b;
        best_f = f;
      }
    }
    if (best_a < 0 || best_f < min_freq) break;

    const std::string merged = symbol_text[static_cast<std::size_t>(best_a)] +
                               symbol_text[static_cast<std::size_t>(best_b)].substr(kContinuation.size());
    const int merged_id = intern(merged);
    if (in_vocab.size() < symbol_text.size()) in_vocab.resize(symbol_text.size(), false);
    in_vocab[static_cast<std::size_t>(merged_id)] = true;
    if (!present[merged]) {
      present[merged] = true;
      pieces.push_back(merged);
    }
    for (auto& w : words) {
      std::vector<int> next;
      next.reserve(w.symbols.size());
      for (std::size_t i = 0; i < w.symbols.size(); ++i) {
        if (i + 1 < w.symbols.size() && w.symbols[i] == best_a && w.symbols[i + 1] == best_b) {
          next.push_back(merged_id);
          ++i;
        } else {
          next.push_back(w.symbols[i]);
        }
      }
      w.symbols = std::move(next);
    }
  }
  return Vocab(pieces);
}

/// Greedy longest-match. A word with any unmatched position becomes one [UNK].
inline std::vector<TokenId> encode_word(std::string_view word, const Vocab& v) {
  const auto chars = unicode::split_chars(word);
  std::vector<TokenId> out;
  std::size_t start = 0;
  while (start < chars.size()) {
    const std::size_t longest = std::min(chars.size() - start, v.max_piece_chars());
    TokenId found = -1;
    std::size_t taken = 0;
    for (std::size_t len = longest; len >= 1; --len) {
      std::string piece = start > 0 ? std::string(kContinuation) : std::string();
      for (std::size_t k = start; k < start + len; ++k) piece += chars[k];
      if (auto id = v.find(piece); id && !Vocab::is_special(*id)) {
        found = *id;
        taken = len;
        break;
      }
    }
    if (found < 0) return {kUnkId};
    out.push_back(found);
    start += taken;
  }
  return out;
}

inline std::vector<TokenId> encode_text(const std::vector<std::string>& tokens, const Vocab& v) {
  std::vector<TokenId> out;
  for (const auto& t : tokens) {
    auto ids = encode_word(t, v);
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

inline std::string decode(const std::vector<TokenId>& ids, const Vocab& v) {
  std::string out;
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= v.size())
      throw DataError("decode: token id " + std::to_string(id) + " out of range");
    if (Vocab::is_special(id)) continue;
    const std::string& piece = v.token(id);
    if (piece.size() > kContinuation.size() && piece.compare(0, 2, kContinuation) == 0) {
      out += piece.substr(kContinuation.size());
    } else {
      if (!out.empty()) out.push_back(' ');
      out += piece;
    }
  }
  return out;
}

}  // namespace meder
