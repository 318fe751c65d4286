#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "cne/vocab.hpp"
#include "cne/word_vectors.hpp"
#include "test_support.hpp"

using namespace cne;
using namespace cne::test;

namespace {
const std::string kFixtures = CNE_FIXTURE_DIR;
}

TEST_CASE("tokenize: lowercase, punctuation splitting, whitespace") {
  CHECK(tokenize("The cat sat.") == std::vector<std::string>{"the", "cat", "sat", "."});
  CHECK(tokenize("").empty());
  CHECK(tokenize("   \t \n ").empty());
  CHECK(tokenize("don't stop") == std::vector<std::string>{"don", "'", "t", "stop"});
  CHECK(tokenize("Hello, world!") == std::vector<std::string>{"hello", ",", "world", "!"});
  CHECK(tokenize("a--b") == std::vector<std::string>{"a", "-", "-", "b"});
  CHECK(tokenize("O'Neil's 2nd") ==
        std::vector<std::string>{"o", "'", "neil", "'", "s", "2nd"});
}

TEST_CASE("tokenize: frozen outputs on fixture sentences") {
  // Golden results of the rule set, frozen from the fixture generator.
  CHECK(tokenize("road dog river , river made old was he sat ,") ==
        std::vector<std::string>{"road", "dog", "river", ",", "river", "made", "old", "was",
                                 "he", "sat", ","});
  CHECK(tokenize("Sometimes so a nightn't saw , he was we ?") ==
        std::vector<std::string>{"sometimes", "so", "a", "nightn", "'", "t", "saw", ",", "he",
                                 "was", "we", "?"});
}

TEST_CASE("build_vocab: frequency order and threshold") {
  const std::vector<std::vector<std::string>> docs{{"a", "a", "b"}};
  const Vocabulary v1 = Vocabulary::build(docs, 1);
  CHECK(v1.id_of("a") == 1);
  CHECK(v1.id_of("b") == 2);
  CHECK(v1.count_of(1) == 2);
  CHECK(v1.count_of(2) == 1);
  CHECK(v1.size() == 3);

  const Vocabulary v2 = Vocabulary::build(docs, 2);
  CHECK(v2.id_of("a") == 1);
  CHECK(v2.id_of("b") == Vocabulary::kUnkId);
  CHECK(v2.size() == 2);
  CHECK(v2.count_of(Vocabulary::kUnkId) == 1);  // the dropped "b"
}

TEST_CASE("build_vocab: lexicographic tie-break and empty corpus error") {
  const std::vector<std::vector<std::string>> docs{{"zeta", "beta", "alpha"}};
  const Vocabulary v = Vocabulary::build(docs, 1);
  CHECK(v.id_of("alpha") == 1);
  CHECK(v.id_of("beta") == 2);
  CHECK(v.id_of("zeta") == 3);

  CHECK_THROWS_WITH_AS(Vocabulary::build({}, 1), "empty corpus", std::runtime_error);
  CHECK_THROWS_WITH_AS(Vocabulary::build({{}, {}}, 1), "empty corpus", std::runtime_error);
}

TEST_CASE("build_vocab: fixture corpus matches the golden vocabulary") {
  const auto raw = load_corpus_lines(kFixtures + "/corpus_100.txt", LabelMode::kNone);
  REQUIRE(raw.size() == 100);
  std::vector<std::vector<std::string>> docs;
  for (const auto& rd : raw) docs.push_back(tokenize(rd.text));
  const Vocabulary vocab = Vocabulary::build(docs, 2);

  // Independent recount of the same token streams, kept apart from the
  // production pipeline on purpose.
  std::map<std::string, long long> counts;
  for (const auto& doc : docs) {
    for (const auto& tok : doc) ++counts[tok];
  }
  long long dropped = 0;
  std::vector<std::pair<std::string, long long>> kept;
  for (const auto& [tok, c] : counts) {
    if (c >= 2) kept.emplace_back(tok, c);
    else dropped += c;
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  REQUIRE(vocab.size() == static_cast<int>(kept.size()) + 1);
  CHECK(vocab.count_of(0) == dropped);
  for (size_t i = 0; i < kept.size(); ++i) {
    CHECK(vocab.token_of(static_cast<int>(i) + 1) == kept[i].first);
    CHECK(vocab.count_of(static_cast<int>(i) + 1) == kept[i].second);
  }

  // Frozen golden file equality, byte for byte.
  const std::string tmp = make_temp_dir("vocab_golden");
  vocab.save(tmp + "/vocab.txt");
  CHECK(files_identical(tmp + "/vocab.txt", kFixtures + "/corpus_100_vocab.golden"));
  remove_tree(tmp);
}

TEST_CASE("build_vocab: deterministic across builds") {
  const auto raw = load_corpus_lines(kFixtures + "/corpus_100.txt", LabelMode::kNone);
  std::vector<std::vector<std::string>> docs;
  for (const auto& rd : raw) docs.push_back(tokenize(rd.text));
  const Vocabulary a = Vocabulary::build(docs, 2);
  const Vocabulary b = Vocabulary::build(docs, 2);
  REQUIRE(a.size() == b.size());
  for (int id = 0; id < a.size(); ++id) {
    CHECK(a.token_of(id) == b.token_of(id));
    CHECK(a.count_of(id) == b.count_of(id));
  }
}

TEST_CASE("vocabulary: save/load round trip") {
  const Vocabulary v = Vocabulary::build({{"x", "x", "y", "z"}}, 2);
  const std::string tmp = make_temp_dir("vocab_io");
  v.save(tmp + "/v.txt");
  const Vocabulary r = Vocabulary::load(tmp + "/v.txt");
  CHECK(r.size() == v.size());
  CHECK(r.id_of("x") == v.id_of("x"));
  CHECK(r.count_of(0) == v.count_of(0));
  remove_tree(tmp);
}

TEST_CASE("encode: id mapping, unk fallback, decode identity") {
  const Vocabulary v = Vocabulary::build({{"a", "a", "b"}}, 1);
  const Document d1 = encode(1, {"a", "b"}, v);
  CHECK(d1.word_ids == std::vector<int>{1, 2});
  const Document d2 = encode(2, {"a", "zzz"}, v);
  CHECK(d2.word_ids == std::vector<int>{1, 0});

  // decode(encode(x)) restores in-vocabulary tokens
  const std::vector<std::string> tokens{"b", "a", "a", "b"};
  CHECK(decode(encode(3, tokens, v), v) == tokens);
}

TEST_CASE("corpus lines: labels, auto-detection, blank lines") {
  const std::string tmp = make_temp_dir("corpus_lines");
  write_file(tmp + "/plain.txt", "first doc\n\nsecond doc\r\n   \nthird\n");
  const auto plain = load_corpus_lines(tmp + "/plain.txt", LabelMode::kAuto);
  REQUIRE(plain.size() == 3);
  CHECK(plain[0].text == "first doc");
  CHECK(plain[0].label == -1);
  CHECK(plain[1].text == "second doc");
  CHECK(plain[2].id == 5);  // line numbers are ids

  write_file(tmp + "/labeled.txt", "1\tgood stuff\n0\tbad stuff\n");
  const auto labeled = load_corpus_lines(tmp + "/labeled.txt", LabelMode::kAuto);
  REQUIRE(labeled.size() == 2);
  CHECK(labeled[0].label == 1);
  CHECK(labeled[0].text == "good stuff");
  CHECK(labeled[1].label == 0);

  write_file(tmp + "/broken.txt", "1\tok\nno label here\n");
  CHECK_THROWS_WITH_AS(load_corpus_lines(tmp + "/broken.txt", LabelMode::kRequire),
                       doctest::Contains("line 2"), std::runtime_error);
  remove_tree(tmp);
}

TEST_CASE("word vectors: text load with coverage and random fill") {
  const std::string tmp = make_temp_dir("wv_text");
  const Vocabulary v = Vocabulary::build({{"apple", "apple", "pear", "pear", "plum", "plum"}}, 1);
  const int m = 300;
  {
    std::ostringstream file;
    file << "2 " << m << "\n";
    file << "apple";
    for (int c = 0; c < m; ++c) file << " " << 0.001 * c;
    file << "\npear";
    for (int c = 0; c < m; ++c) file << " " << -0.5;
    file << "\n";
    write_file(tmp + "/vec.txt", file.str());
  }
  LoadReport report;
  const WordTable table =
      load_word_vectors(tmp + "/vec.txt", v, m, VectorFileFormat::kAuto, 9, &report);
  CHECK(table.dim() == m);
  CHECK(table.size() == v.size());
  CHECK(report.found == 2);
  CHECK(report.missing == 1);  // "plum"
  CHECK(report.coverage() == doctest::Approx(2.0 / 3.0));
  CHECK(table.vectors(v.id_of("apple"), 5) == doctest::Approx(0.005));
  CHECK(table.vectors(v.id_of("pear"), 0) == doctest::Approx(-0.5));
  // absent token stays inside the init bound; unk row is zero
  const float bound = 0.5f / m;
  for (int c = 0; c < m; ++c) {
    CHECK(std::abs(table.vectors(v.id_of("plum"), c)) <= bound);
    CHECK(table.vectors(Vocabulary::kUnkId, c) == 0.0f);
  }
  remove_tree(tmp);
}

TEST_CASE("word vectors: dimension mismatch names the expected m") {
  const std::string tmp = make_temp_dir("wv_dim");
  const Vocabulary v = Vocabulary::build({{"a", "a"}}, 1);
  std::ostringstream file;
  file << "1 100\na";
  for (int c = 0; c < 100; ++c) file << " 0.5";
  file << "\n";
  write_file(tmp + "/vec.txt", file.str());
  CHECK_THROWS_WITH_AS(load_word_vectors(tmp + "/vec.txt", v, 300),
                       doctest::Contains("m=300"), std::runtime_error);
  remove_tree(tmp);
}

TEST_CASE("word vectors: malformed line reports the line number") {
  const std::string tmp = make_temp_dir("wv_bad");
  const Vocabulary v = Vocabulary::build({{"a", "a"}}, 1);
  write_file(tmp + "/vec.txt", "2 3\na 0.1 0.2 0.3\nb 0.1 oops 0.3\n");
  CHECK_THROWS_WITH_AS(load_word_vectors(tmp + "/vec.txt", v, 3, VectorFileFormat::kText),
                       doctest::Contains("line 3"), std::runtime_error);
  remove_tree(tmp);
}

TEST_CASE("word vectors: binary fixture parses byte-exactly and round trips") {
  const std::string tmp = make_temp_dir("wv_bin");
  // Hand-built reference file: header, then "tok " + 2 little-endian floats.
  const float f1 = 1.5f, f2 = -0.25f, f3 = 3.0e-7f, f4 = 1024.0f;
  std::string payload = "2 2\n";
  auto append_le = [&payload](float f) {
    char b[4];
    std::memcpy(b, &f, 4);
    payload.append(b, 4);
  };
  payload += "cat ";
  append_le(f1);
  append_le(f2);
  payload += "\ndog ";
  append_le(f3);
  append_le(f4);
  payload += "\n";
  write_file(tmp + "/ref.bin", payload);

  const RawVectors raw = read_vector_file(tmp + "/ref.bin", VectorFileFormat::kAuto);
  REQUIRE(raw.names == std::vector<std::string>{"cat", "dog"});
  float got;
  got = raw.vectors(0, 0);
  CHECK(std::memcmp(&got, &f1, 4) == 0);
  got = raw.vectors(0, 1);
  CHECK(std::memcmp(&got, &f2, 4) == 0);
  got = raw.vectors(1, 0);
  CHECK(std::memcmp(&got, &f3, 4) == 0);
  got = raw.vectors(1, 1);
  CHECK(std::memcmp(&got, &f4, 4) == 0);

  // Saving the parsed table reproduces the reference file bit for bit.
  save_word_vectors_binary(tmp + "/roundtrip.bin", raw.names, raw.vectors);
  CHECK(files_identical(tmp + "/ref.bin", tmp + "/roundtrip.bin"));
  remove_tree(tmp);
}

TEST_CASE("word vectors: text format round trips float values exactly") {
  const std::string tmp = make_temp_dir("wv_text_rt");
  Rng rng(77);
  MatF vectors(5, 7);
  for (auto& v : vectors.data) v = static_cast<float>(rng.uniform_real(-2.0, 2.0));
  const std::vector<std::string> names{"a", "b", "c", "d", "e"};
  save_word_vectors_text(tmp + "/t.vec", names, vectors);
  const RawVectors back = read_vector_file(tmp + "/t.vec");
  REQUIRE(back.names == names);
  CHECK(std::memcmp(back.vectors.data.data(), vectors.data.data(),
                    vectors.size() * sizeof(float)) == 0);
  remove_tree(tmp);
}

TEST_CASE("word vectors: format auto-detection distinguishes text and binary") {
  const std::string tmp = make_temp_dir("wv_auto");
  Rng rng(78);
  MatF vectors(3, 4);
  for (auto& v : vectors.data) v = static_cast<float>(rng.uniform_real(-1.0, 1.0));
  const std::vector<std::string> names{"x", "y", "z"};
  save_word_vectors_text(tmp + "/a.vec", names, vectors);
  save_word_vectors_binary(tmp + "/a.bin", names, vectors);
  const RawVectors t = read_vector_file(tmp + "/a.vec");
  const RawVectors b = read_vector_file(tmp + "/a.bin");
  CHECK(std::memcmp(t.vectors.data.data(), vectors.data.data(), vectors.size() * 4) == 0);
  CHECK(std::memcmp(b.vectors.data.data(), vectors.data.data(), vectors.size() * 4) == 0);
  remove_tree(tmp);
}
