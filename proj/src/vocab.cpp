#include "cne/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <stdexcept>

namespace cne {

std::vector<std::string> tokenize(const std::string& text, const TokenizerRules& rules) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (unsigned char ch : text) {
    if (std::isspace(ch)) {
      flush();
    } else if (rules.split_punctuation && std::ispunct(ch)) {
      flush();
      tokens.emplace_back(1, static_cast<char>(ch));
    } else {
      char c = static_cast<char>(ch);
      if (rules.lowercase && ch < 0x80) c = static_cast<char>(std::tolower(ch));
      current.push_back(c);
    }
  }
  flush();
  return tokens;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& docs, int min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  // std::map gives the lexicographic order needed for deterministic ties.
  std::map<std::string, int64_t> freq;
  int64_t total = 0;
  for (const auto& doc : docs) {
    for (const auto& tok : doc) {
      ++freq[tok];
      ++total;
    }
  }
  if (total == 0) throw std::runtime_error("empty corpus");

  std::vector<std::pair<std::string, int64_t>> kept;
  int64_t dropped = 0;
  for (const auto& [tok, count] : freq) {
    if (count >= min_count) {
      kept.emplace_back(tok, count);
    } else {
      dropped += count;
    }
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  Vocabulary v;
  v.id_to_token_.push_back(kUnkToken);
  v.counts_.push_back(dropped);
  for (const auto& [tok, count] : kept) {
    v.token_to_id_[tok] = static_cast<int>(v.id_to_token_.size());
    v.id_to_token_.push_back(tok);
    v.counts_.push_back(count);
  }
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocabulary file: " + path);
  for (size_t id = 0; id < id_to_token_.size(); ++id) {
    out << id_to_token_[id] << '\t' << counts_[id] << '\n';
  }
  if (!out) throw std::runtime_error("failed writing vocabulary file: " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
  Vocabulary v;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error("malformed vocabulary line " + std::to_string(line_no) +
                               " in " + path);
    }
    std::string tok = line.substr(0, tab);
    int64_t count = 0;
    try {
      count = std::stoll(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw std::runtime_error("malformed vocabulary count at line " + std::to_string(line_no) +
                               " in " + path);
    }
    const int id = static_cast<int>(v.id_to_token_.size());
    if (id > 0) v.token_to_id_[tok] = id;
    v.id_to_token_.push_back(tok);
    v.counts_.push_back(count);
  }
  if (v.id_to_token_.empty() || v.id_to_token_[0] != kUnkToken) {
    throw std::runtime_error("vocabulary file missing unknown-token row: " + path);
  }
  return v;
}

Document encode(int64_t id, const std::vector<std::string>& tokens, const Vocabulary& vocab,
                int label) {
  Document doc;
  doc.id = id;
  doc.label = label;
  doc.word_ids.reserve(tokens.size());
  for (const auto& tok : tokens) doc.word_ids.push_back(vocab.id_of(tok));
  return doc;
}

std::vector<std::string> decode(const Document& doc, const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(doc.word_ids.size());
  for (int id : doc.word_ids) out.push_back(vocab.token_of(id));
  return out;
}

namespace {

bool parse_label(const std::string& line, int* label, std::string* text) {
  const size_t tab = line.find('\t');
  if (tab == std::string::npos || tab == 0) return false;
  const std::string head = line.substr(0, tab);
  size_t pos = 0;
  try {
    const int value = std::stoi(head, &pos);
    if (pos != head.size()) return false;
    *label = value;
    *text = line.substr(tab + 1);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

std::vector<RawDocument> load_corpus_lines(const std::string& path, LabelMode mode) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  std::vector<RawDocument> docs;
  std::string line;
  int64_t line_no = 0;
  bool labeled = mode == LabelMode::kRequire;
  bool decided = mode != LabelMode::kAuto;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    int label = -1;
    std::string text = line;
    if (!decided) {
      labeled = parse_label(line, &label, &text);
      decided = true;
      if (labeled) {
        docs.push_back({line_no, text, label});
        continue;
      }
    }
    if (labeled) {
      if (!parse_label(line, &label, &text)) {
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": expected \"label<TAB>text\" in " + path);
      }
      docs.push_back({line_no, text, label});
    } else {
      docs.push_back({line_no, line, -1});
    }
  }
  return docs;
}

std::vector<Document> encode_corpus(const std::vector<RawDocument>& raw, const Vocabulary& vocab,
                                    const TokenizerRules& rules, std::vector<int64_t>* dropped) {
  std::vector<Document> docs;
  docs.reserve(raw.size());
  for (const auto& rd : raw) {
    auto tokens = tokenize(rd.text, rules);
    if (tokens.empty()) {
      if (dropped != nullptr) dropped->push_back(rd.id);
      continue;
    }
    docs.push_back(encode(rd.id, tokens, vocab, rd.label));
  }
  return docs;
}

}  // namespace cne
