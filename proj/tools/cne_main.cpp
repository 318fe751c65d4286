// cne: unsupervised document embedding trainer and evaluation harness.
//
// Subcommands: train, embed, retrieve, eval, bench. Data goes to stdout,
// diagnostics to stderr. Exit codes: 0 success, 2 configuration error,
// 3 data error, 4 numerical failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "CLI11.hpp"
#include "cne/checkpoint.hpp"
#include "cne/classifier.hpp"
#include "cne/embedding_index.hpp"
#include "cne/model.hpp"
#include "cne/run_config.hpp"
#include "cne/thread_pool.hpp"
#include "cne/trainer.hpp"
#include "cne/vocab.hpp"
#include "cne/word_vectors.hpp"

namespace {

using namespace cne;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int default_threads() {
  if (const char* env = std::getenv("CNE_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

std::vector<RawDocument> load_corpus_or_die(const std::string& path, LabelMode mode) {
  try {
    return load_corpus_lines(path, mode);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
}

struct LoadedModel {
  EmbeddingModelF model;
  Vocabulary vocab;
};

LoadedModel load_model_and_vocab(const std::string& checkpoint_path, const std::string& vocab_path) {
  LoadedModel lm;
  try {
    lm.vocab = Vocabulary::load(vocab_path);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  lm.model = load_model(checkpoint_path);
  if (lm.model.word_vectors.rows != lm.vocab.size()) {
    throw ConfigError("vocabulary (" + std::to_string(lm.vocab.size()) +
                      " tokens) does not match checkpoint word table (" +
                      std::to_string(lm.model.word_vectors.rows) + " rows)");
  }
  return lm;
}

std::string sanitize_snippet(const std::string& text, size_t max_len = 80) {
  std::string out = text.substr(0, max_len);
  for (char& c : out) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              int threads) {
  const RunSettings settings = parse_run_config(config_path, overrides);
  if (settings.corpus.empty()) throw ConfigError("config is missing data.corpus");
  if (settings.output_dir.empty()) throw ConfigError("config is missing output.dir");
  settings.model.validate();
  settings.train.validate();
  if (settings.model.aggregation == Aggregation::kMeanPool) {
    std::cerr << "warning: mean aggregation is an untested configuration stub\n";
  }

  std::filesystem::create_directories(settings.output_dir);
  const std::string resolved = render_run_config(settings);
  std::cerr << "resolved configuration:\n" << resolved;
  {
    std::ofstream out(settings.output_dir + "/resolved.conf");
    out << resolved;
  }

  const auto raw = load_corpus_or_die(settings.corpus, settings.labels);
  if (raw.empty()) throw DataError("corpus is empty: " + settings.corpus);
  std::vector<std::vector<std::string>> token_docs;
  token_docs.reserve(raw.size());
  for (const auto& rd : raw) token_docs.push_back(tokenize(rd.text));
  Vocabulary vocab;
  try {
    vocab = Vocabulary::build(token_docs, settings.min_count);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  std::cerr << "vocabulary: " << vocab.size() << " tokens (min_count=" << settings.min_count
            << ")\n";

  std::vector<Document> docs;
  docs.reserve(raw.size());
  for (size_t d = 0; d < raw.size(); ++d) {
    Document doc = encode(raw[d].id, token_docs[d], vocab, raw[d].label);
    if (doc.length() >= 1) docs.push_back(std::move(doc));
  }

  EmbeddingModelF model;
  if (!settings.word_vectors.empty()) {
    LoadReport report;
    try {
      model.word_vectors = load_word_vectors(settings.word_vectors, vocab, settings.model.m,
                                             settings.word_vectors_format, settings.train.seed,
                                             &report)
                               .vectors;
    } catch (const std::exception& e) {
      throw DataError(e.what());
    }
    std::cerr << "word vectors: " << report.found << "/" << report.found + report.missing
              << " tokens covered (" << static_cast<int>(report.coverage() * 100 + 0.5)
              << "%)\n";
  } else {
    model.word_vectors =
        random_word_table(vocab.size(), settings.model.m, settings.train.seed).vectors;
    std::cerr << "word vectors: random initialization\n";
  }
  model.encoder = build_encoder<float>(settings.model, settings.train.seed);
  std::cerr << "model: " << model.encoder.param_count() << " encoder parameters + "
            << model.word_vectors.size() << " word-vector values\n";

  ThreadPool pool(threads);
  std::ofstream log(settings.output_dir + "/train.log");
  const std::string checkpoint_path = settings.output_dir + "/model.cne";
  const auto t_begin = std::chrono::steady_clock::now();
  fit(docs, model, settings.train, threads > 1 ? &pool : nullptr, [&](const EpochStats& s) {
    const std::string line = format_epoch_log_line(s);
    log << line << '\n';
    log.flush();
    std::cerr << "epoch " << s.epoch << ": mean_loss=" << s.mean_loss << " docs=" << s.docs
              << " tokens/s=" << static_cast<long long>(s.tokens_per_sec) << "\n";
    if (settings.train.checkpoint_every > 0 && s.epoch % settings.train.checkpoint_every == 0 &&
        s.epoch != settings.train.epochs) {
      save_model(settings.output_dir + "/model_epoch" + std::to_string(s.epoch) + ".cne", model);
    }
  });
  const double total_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();

  save_model(checkpoint_path, model);
  vocab.save(settings.output_dir + "/vocab.txt");
  std::cerr << "training finished in " << total_s << " s; checkpoint: " << checkpoint_path
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_embed(const std::string& checkpoint_path, const std::string& vocab_path,
              const std::string& input_path, const std::string& output_path, int threads) {
  LoadedModel lm = load_model_and_vocab(checkpoint_path, vocab_path);

  std::ifstream in(input_path);
  if (!in) throw DataError("cannot open input file: " + input_path);
  std::vector<std::string> names;
  std::vector<Document> docs;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tokens = tokenize(line);
    if (tokens.empty()) {
      throw DataError("input line " + std::to_string(line_no) + " has no tokens; " +
                      "every line must contain at least one word");
    }
    docs.push_back(encode(line_no, tokens, lm.vocab));
    names.push_back(std::to_string(line_no));
  }
  if (docs.empty()) {
    std::ofstream out(output_path, std::ios::trunc);  // zero lines in, zero lines out
    std::cerr << "embedded 0 document(s) -> " << output_path << "\n";
    return 0;
  }

  MatF embeddings(static_cast<int>(docs.size()), lm.model.encoder.config.m);
  ThreadPool pool(threads);
  parallel_chunks(threads > 1 ? &pool : nullptr, static_cast<int>(docs.size()),
                  [&](int begin, int end) {
                    for (int d = begin; d < end; ++d) {
                      const auto vec = embed_document(lm.model, docs[d].word_ids);
                      std::copy(vec.begin(), vec.end(), embeddings.row(d));
                    }
                  });
  save_word_vectors_text(output_path, names, embeddings);
  std::cerr << "embedded " << docs.size() << " document(s) -> " << output_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_retrieve(const std::string& checkpoint_path, const std::string& vocab_path,
                 const std::string& corpus_path, const std::string& query, int top_k,
                 int threads) {
  if (top_k < 1) throw ConfigError("--top-k must be >= 1");
  LoadedModel lm = load_model_and_vocab(checkpoint_path, vocab_path);
  const auto raw = load_corpus_or_die(corpus_path, LabelMode::kAuto);
  if (raw.empty()) throw DataError("corpus is empty: " + corpus_path);

  std::vector<Document> docs;
  std::vector<std::string> texts;
  for (const auto& rd : raw) {
    const auto tokens = tokenize(rd.text);
    if (tokens.empty()) continue;
    docs.push_back(encode(rd.id, tokens, lm.vocab));
    texts.push_back(rd.text);
  }
  if (docs.empty()) throw DataError("corpus has no tokenizable documents: " + corpus_path);

  const auto query_tokens = tokenize(query);
  if (query_tokens.empty()) throw DataError("query has no tokens");
  const Document query_doc = encode(-1, query_tokens, lm.vocab);

  MatF vectors(static_cast<int>(docs.size()), lm.model.encoder.config.m);
  ThreadPool pool(threads);
  parallel_chunks(threads > 1 ? &pool : nullptr, static_cast<int>(docs.size()),
                  [&](int begin, int end) {
                    for (int d = begin; d < end; ++d) {
                      const auto vec = embed_document(lm.model, docs[d].word_ids);
                      std::copy(vec.begin(), vec.end(), vectors.row(d));
                    }
                  });

  std::vector<int64_t> ids;
  ids.reserve(docs.size());
  for (const auto& d : docs) ids.push_back(d.id);
  const EmbeddingIndex index = EmbeddingIndex::build(std::move(ids), std::move(vectors));

  // A corpus document with the query's exact token sequence is the query
  // itself; exclude it from its own results.
  std::unordered_set<int64_t> exclude;
  for (const auto& d : docs) {
    if (d.word_ids == query_doc.word_ids) exclude.insert(d.id);
  }

  const auto query_vec = embed_document(lm.model, query_doc.word_ids);
  const auto hits = retrieve(index, query_vec, top_k, exclude);
  for (const auto& hit : hits) {
    size_t row = 0;
    while (docs[row].id != hit.doc_id) ++row;
    std::printf("%.3f\t%lld\t%s\n", static_cast<double>(hit.score),
                static_cast<long long>(hit.doc_id), sanitize_snippet(texts[row]).c_str());
  }
  return 0;
}

// ---------------------------------------------------------------------------

int map_label(int rating, const std::string& label_map, int64_t doc_id, bool* drop) {
  *drop = false;
  if (label_map == "raw") {
    if (rating < 0) {
      throw DataError("document " + std::to_string(doc_id) + ": negative label " +
                      std::to_string(rating));
    }
    return rating;
  }
  // amazon_binary: ratings 1-2 negative, 4-5 positive, 3 dropped.
  if (rating <= 2 && rating >= 1) return 0;
  if (rating >= 4 && rating <= 5) return 1;
  if (rating == 3) {
    *drop = true;
    return 0;
  }
  throw DataError("document " + std::to_string(doc_id) + ": rating " + std::to_string(rating) +
                  " outside 1..5 for amazon_binary mapping");
}

int cmd_eval(const std::string& checkpoint_path, const std::string& vocab_path,
             const std::string& train_path, const std::string& test_path,
             const std::string& label_map, const std::string& task_name, int epochs, double lr,
             uint64_t seed, int threads) {
  if (label_map != "raw" && label_map != "amazon_binary") {
    throw ConfigError("--label-map must be raw or amazon_binary");
  }
  LoadedModel lm = load_model_and_vocab(checkpoint_path, vocab_path);

  ThreadPool pool(threads);
  auto embed_set = [&](const std::string& path, std::vector<std::vector<float>>* embeddings,
                       std::vector<int>* labels) {
    const auto raw = load_corpus_or_die(path, LabelMode::kRequire);
    if (raw.empty()) throw DataError("no labeled documents in " + path);
    std::vector<Document> docs;
    for (const auto& rd : raw) {
      bool drop = false;
      const int label = map_label(rd.label, label_map, rd.id, &drop);
      if (drop) continue;
      const auto tokens = tokenize(rd.text);
      if (tokens.empty()) continue;
      docs.push_back(encode(rd.id, tokens, lm.vocab, label));
    }
    if (docs.empty()) throw DataError("no usable documents in " + path);
    embeddings->assign(docs.size(), {});
    labels->assign(docs.size(), 0);
    parallel_chunks(threads > 1 ? &pool : nullptr, static_cast<int>(docs.size()),
                    [&](int begin, int end) {
                      for (int d = begin; d < end; ++d) {
                        (*embeddings)[d] = embed_document(lm.model, docs[d].word_ids);
                        (*labels)[d] = docs[d].label;
                      }
                    });
  };

  std::vector<std::vector<float>> train_x, test_x;
  std::vector<int> train_y, test_y;
  embed_set(train_path, &train_x, &train_y);
  embed_set(test_path, &test_x, &test_y);

  ClassifierConfig cfg;
  cfg.epochs = epochs;
  cfg.lr = static_cast<float>(lr);
  cfg.seed = seed;
  const ShallowClassifier clf = train_classifier(train_x, train_y, cfg);
  const double accuracy = evaluate_accuracy(clf, test_x, test_y);

  std::printf("task: %s\n", task_name.c_str());
  std::printf("train_docs: %zu\n", train_x.size());
  std::printf("test_docs: %zu\n", test_x.size());
  std::printf("classes: %d\n", clf.classes);
  std::printf("accuracy: %.4f\n", accuracy);
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_bench(const std::string& checkpoint_path, const std::string& vocab_path,
              const std::string& corpus_path, const std::string& batch_sizes_arg, int repeats,
              bool intra_op, int threads) {
  LoadedModel lm = load_model_and_vocab(checkpoint_path, vocab_path);
  const auto raw = load_corpus_or_die(corpus_path, LabelMode::kAuto);
  if (raw.empty()) throw DataError("corpus is empty: " + corpus_path);

  std::vector<int> batch_sizes;
  {
    std::stringstream ss(batch_sizes_arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const int b = std::atoi(item.c_str());
      if (b < 1) throw ConfigError("--batch-sizes: invalid batch size \"" + item + "\"");
      batch_sizes.push_back(b);
    }
  }
  if (batch_sizes.empty()) throw ConfigError("--batch-sizes: empty list");
  if (repeats < 1) throw ConfigError("--repeats must be >= 1");

  // Tokenization and encoding are excluded from the timed region; the
  // benchmark measures the embedding forward pass (table lookup included).
  std::vector<Document> docs;
  for (const auto& rd : raw) {
    const auto tokens = tokenize(rd.text);
    if (tokens.empty()) continue;
    docs.push_back(encode(rd.id, tokens, lm.vocab));
  }
  if (docs.empty()) throw DataError("corpus has no tokenizable documents: " + corpus_path);

  ThreadPool pool(threads);
  std::printf("batch_size\tdocs\ttokens\tseconds\ttokens_per_s\n");
  for (const int batch : batch_sizes) {
    // Warm-up: one batch, untimed.
    {
      const int n = std::min<int>(batch, static_cast<int>(docs.size()));
      for (int d = 0; d < n; ++d) embed_document(lm.model, docs[d].word_ids);
    }
    long long tokens = 0;
    long long done = 0;
    const auto t0 = std::chrono::steady_clock::now();
    for (int rep = 0; rep < repeats; ++rep) {
      for (size_t begin = 0; begin < docs.size(); begin += batch) {
        const size_t end = std::min(begin + batch, docs.size());
        if (intra_op) {
          // Within-document parallelism: convolution channels fan out over
          // the pool, documents stay sequential.
          for (size_t d = begin; d < end; ++d) {
            embed_document(lm.model, docs[d].word_ids, threads > 1 ? &pool : nullptr);
          }
        } else {
          // Document-level parallelism within the batch; each forward pass is
          // single-threaded, batch 1 therefore measures one stream.
          parallel_chunks(batch > 1 && threads > 1 ? &pool : nullptr,
                          static_cast<int>(end - begin), [&](int b0, int b1) {
                            for (int d = b0; d < b1; ++d) {
                              embed_document(lm.model, docs[begin + d].word_ids);
                            }
                          });
        }
        for (size_t d = begin; d < end; ++d) tokens += docs[d].length();
        done += static_cast<long long>(end - begin);
      }
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double tps = seconds > 0 ? static_cast<double>(tokens) / seconds : 0.0;
    std::printf("%d\t%lld\t%lld\t%.4f\t%.1f\n", batch, done, tokens, seconds, tps);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cne: unsupervised convolutional document embeddings"};
  app.require_subcommand(1);
  int threads = default_threads();
  app.add_option("--threads", threads, "worker threads (default: $CNE_THREADS or 1)")
      ->check(CLI::PositiveNumber);

  // train
  auto* train = app.add_subcommand("train", "train an embedding model from a config file");
  std::string config_path;
  std::vector<std::string> overrides;
  train->add_option("--config", config_path, "run configuration file")->required();
  train->add_option("--set", overrides, "override a config key: section.key=value");

  // embed
  auto* embed = app.add_subcommand("embed", "embed one document per input line");
  std::string checkpoint, vocab_path, input_path, output_path;
  embed->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  embed->add_option("--vocab", vocab_path, "vocabulary file")->required();
  embed->add_option("--input", input_path, "input documents, one per line")->required();
  embed->add_option("--output", output_path, "output vector file (word2vec text format)")
      ->required();

  // retrieve
  auto* retrieve_cmd = app.add_subcommand("retrieve", "rank corpus documents against a query");
  std::string corpus_path, query;
  int top_k = 3;
  retrieve_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  retrieve_cmd->add_option("--vocab", vocab_path, "vocabulary file")->required();
  retrieve_cmd->add_option("--corpus", corpus_path, "corpus to search")->required();
  retrieve_cmd->add_option("--query", query, "query text")->required();
  retrieve_cmd->add_option("--top-k", top_k, "results to return (default 3)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "train and score a shallow classifier on embeddings");
  std::string train_path, test_path, label_map = "raw", task_name = "eval";
  int clf_epochs = 50;
  double clf_lr = 0.01;
  uint64_t clf_seed = 1;
  eval_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  eval_cmd->add_option("--vocab", vocab_path, "vocabulary file")->required();
  eval_cmd->add_option("--train", train_path, "labeled training documents")->required();
  eval_cmd->add_option("--test", test_path, "labeled test documents")->required();
  eval_cmd->add_option("--label-map", label_map, "raw or amazon_binary (default raw)");
  eval_cmd->add_option("--name", task_name, "task name for the report");
  eval_cmd->add_option("--epochs", clf_epochs, "classifier epochs (default 50)");
  eval_cmd->add_option("--lr", clf_lr, "classifier learning rate (default 0.01)");
  eval_cmd->add_option("--seed", clf_seed, "classifier seed (default 1)");

  // bench
  auto* bench = app.add_subcommand("bench", "measure embedding throughput");
  std::string batch_sizes = "1,32";
  int repeats = 1;
  bool intra_op = false;
  bench->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  bench->add_option("--vocab", vocab_path, "vocabulary file")->required();
  bench->add_option("--corpus", corpus_path, "documents to embed")->required();
  bench->add_option("--batch-sizes", batch_sizes, "comma-separated batch sizes (default 1,32)");
  bench->add_option("--repeats", repeats, "passes over the corpus per row (default 1)");
  bench->add_flag("--intra-op", intra_op,
                  "parallelize inside each forward pass instead of across documents");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train) return cmd_train(config_path, overrides, threads);
    if (*embed) return cmd_embed(checkpoint, vocab_path, input_path, output_path, threads);
    if (*retrieve_cmd)
      return cmd_retrieve(checkpoint, vocab_path, corpus_path, query, top_k, threads);
    if (*eval_cmd)
      return cmd_eval(checkpoint, vocab_path, train_path, test_path, label_map, task_name,
                      clf_epochs, clf_lr, clf_seed, threads);
    if (*bench)
      return cmd_bench(checkpoint, vocab_path, corpus_path, batch_sizes, repeats, intra_op,
                       threads);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const TrainingNumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
