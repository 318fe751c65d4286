#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace cne {

struct TokenizerRules {
  bool lowercase = true;
  bool split_punctuation = true;
};

// Lowercases ASCII, splits punctuation characters into single-character
// tokens, and delimits on whitespace. Bytes outside ASCII pass through
// untouched. Empty input yields an empty sequence.
std::vector<std::string> tokenize(const std::string& text, const TokenizerRules& rules = {});

// Token <-> id map. Id 0 is reserved for the unknown token; ids 1..V-1 are
// assigned by descending corpus frequency with lexicographic tie-break.
class Vocabulary {
 public:
  static constexpr int kUnkId = 0;
  static constexpr const char* kUnkToken = "<unk>";

  // Tokens occurring fewer than min_count times fold into the unknown id.
  // Throws std::runtime_error("empty corpus") when no tokens are present.
  static Vocabulary build(const std::vector<std::vector<std::string>>& docs, int min_count);

  int id_of(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnkId : it->second;
  }
  const std::string& token_of(int id) const { return id_to_token_.at(id); }
  int64_t count_of(int id) const { return counts_.at(id); }
  int size() const { return static_cast<int>(id_to_token_.size()); }

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
  std::vector<int64_t> counts_;
};

struct Document {
  int64_t id = 0;
  std::vector<int> word_ids;
  int label = -1;  // only evaluation reads this; training never does

  int length() const { return static_cast<int>(word_ids.size()); }
};

// Unknown tokens map to the unk id; order preserved.
Document encode(int64_t id, const std::vector<std::string>& tokens, const Vocabulary& vocab,
                int label = -1);

std::vector<std::string> decode(const Document& doc, const Vocabulary& vocab);

struct RawDocument {
  int64_t id = 0;
  std::string text;
  int label = -1;
};

enum class LabelMode { kAuto, kRequire, kNone };

// One document per line; optionally "label<TAB>text". Empty lines are
// dropped. kAuto decides from the first line whether the file is labeled.
std::vector<RawDocument> load_corpus_lines(const std::string& path, LabelMode mode);

// Tokenize + encode a whole corpus; documents that tokenize to nothing are
// dropped (their line numbers reported via *dropped if given).
std::vector<Document> encode_corpus(const std::vector<RawDocument>& raw, const Vocabulary& vocab,
                                    const TokenizerRules& rules = {},
                                    std::vector<int64_t>* dropped = nullptr);

}  // namespace cne
