#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace archbert {

using TokenId = std::uint32_t;

/// Lowercases and splits on whitespace and ASCII punctuation.
std::vector<std::string> normalize_words(std::string_view text);

/// Word-level vocabulary with fixed reserved ids.
class TextVocab {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kBos = 2;
  static constexpr TokenId kEos = 3;
  static constexpr TokenId kMask = 4;
  static constexpr std::size_t kReserved = 5;

  TextVocab();
  /// `words` excludes the reserved tokens.
  explicit TextVocab(const std::vector<std::string>& words);

  static TextVocab parse(std::string_view text);
  std::string serialize() const;

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(TokenId id) const;
  TokenId lookup(std::string_view word) const;  // kUnk when absent
  bool contains(std::string_view word) const;
  static bool is_reserved(TokenId id) noexcept { return id < kReserved; }

  bool operator==(const TextVocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Token ids plus a padding mask (true = real token). Padding is a suffix.
struct TokenSeq {
  std::vector<TokenId> ids;
  std::vector<bool> pad_mask;

  std::size_t real_length() const;
};

/// Keeps the `max_size - 5` most frequent words; ties go to the
/// lexicographically smaller word. Throws DataError on an empty corpus.
TextVocab build_vocab(const std::vector<std::string>& corpus, std::size_t max_size);

/// [BOS] words [EOS] padded to `max_len`. Truncation keeps [EOS] last.
TokenSeq tokenize(std::string_view text, const TextVocab& vocab, std::size_t max_len);

/// Drops reserved tokens and joins words with single spaces.
std::string detokenize(const std::vector<TokenId>& ids, const TextVocab& vocab);

}  // namespace archbert
