#include "archbert/textkit.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <sstream>

#include "archbert/error.hpp"

namespace archbert {

namespace {

constexpr std::array<const char*, TextVocab::kReserved> kReservedTokens{"[PAD]", "[UNK]", "[BOS]", "[EOS]",
                                                                        "[MASK]"};

}  // namespace

std::vector<std::string> normalize_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || std::ispunct(c)) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += static_cast<char>(std::tolower(c));
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

TextVocab::TextVocab() : TextVocab(std::vector<std::string>{}) {}

TextVocab::TextVocab(const std::vector<std::string>& words) {
  for (const char* r : kReservedTokens) tokens_.emplace_back(r);
  tokens_.insert(tokens_.end(), words.begin(), words.end());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw DataError("text vocabulary: empty token at id " + std::to_string(i));
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw DataError("text vocabulary: duplicate token '" + tokens_[i] + "'");
    }
  }
}

TextVocab TextVocab::parse(std::string_view text) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.size() < kReserved) throw ParseError("text vocabulary needs the five reserved lines");
  for (std::size_t i = 0; i < kReserved; ++i) {
    if (lines[i] != kReservedTokens[i]) {
      throw ParseError("expected reserved token " + std::string(kReservedTokens[i]), i + 1);
    }
  }
  for (std::size_t i = kReserved; i < lines.size(); ++i) {
    if (lines[i].empty()) throw ParseError("empty token", i + 1);
  }
  return TextVocab(std::vector<std::string>(lines.begin() + kReserved, lines.end()));
}

std::string TextVocab::serialize() const {
  std::string out;
  for (const auto& t : tokens_) out += t + "\n";
  return out;
}

const std::string& TextVocab::token(TokenId id) const {
  if (id >= tokens_.size()) throw DataError("token id " + std::to_string(id) + " outside text vocabulary");
  return tokens_[id];
}

TokenId TextVocab::lookup(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnk : it->second;
}

bool TextVocab::contains(std::string_view word) const { return index_.count(std::string(word)) > 0; }

std::size_t TokenSeq::real_length() const {
  return static_cast<std::size_t>(std::count(pad_mask.begin(), pad_mask.end(), true));
}

TextVocab build_vocab(const std::vector<std::string>& corpus, std::size_t max_size) {
  if (corpus.empty()) throw DataError("build_vocab: empty corpus");
  if (max_size < TextVocab::kReserved) throw DataError("build_vocab: max_size must be at least 5");
  std::map<std::string, std::size_t> counts;
  for (const auto& doc : corpus) {
    for (auto& w : normalize_words(doc)) ++counts[w];
  }
  for (const char* r : kReservedTokens) counts.erase(r);
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const std::size_t keep = std::min(ranked.size(), max_size - TextVocab::kReserved);
  std::vector<std::string> words;
  words.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) words.push_back(ranked[i].first);
  return TextVocab(words);
}

TokenSeq tokenize(std::string_view text, const TextVocab& vocab, std::size_t max_len) {
  if (max_len < 3) throw DataError("tokenize: max_len must be at least 3");
  const auto words = normalize_words(text);
  TokenSeq seq;
  seq.ids.reserve(max_len);
  seq.ids.push_back(TextVocab::kBos);
  const std::size_t room = max_len - 2;
  for (std::size_t i = 0; i < words.size() && i < room; ++i) seq.ids.push_back(vocab.lookup(words[i]));
  seq.ids.push_back(TextVocab::kEos);
  seq.pad_mask.assign(seq.ids.size(), true);
  seq.ids.resize(max_len, TextVocab::kPad);
  seq.pad_mask.resize(max_len, false);
  return seq;
}

std::string detokenize(const std::vector<TokenId>& ids, const TextVocab& vocab) {
  std::string out;
  for (auto id : ids) {
    const auto& tok = vocab.token(id);
    if (TextVocab::is_reserved(id)) continue;
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

}  // namespace archbert
