#include "cne/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "cne/optim.hpp"
#include "cne/rng.hpp"

namespace cne {

namespace {

struct ForwardResult {
  std::vector<float> hidden;  // tanh activations
  std::vector<float> probs;   // softmax
};

ForwardResult classifier_forward(const ShallowClassifier& clf, const std::vector<float>& x) {
  ForwardResult r;
  r.hidden.resize(clf.w1.rows);
  for (int hztr = 0; hztr < clf.w1.rows; ++hztr) {
    const float* w = clf.w1.row(hztr);
    float acc = clf.b1(hztr, 0);
    for (size_t i = 0; i < x.size(); ++i) acc += w[i] * x[i];
    r.hidden[hztr] = std::tanh(acc);
  }
  r.probs.resize(clf.classes);
  float max_logit = -1e30f;
  for (int c = 0; c < clf.classes; ++c) {
    const float* w = clf.w2.row(c);
    float acc = clf.b2(c, 0);
    for (int hzc = 0; hzc < clf.w1.rows; ++hzc) acc += w[hzc] * r.hidden[hzc];
    r.probs[c] = acc;
    max_logit = std::max(max_logit, acc);
  }
  float z = 0.0f;
  for (int c = 0; c < clf.classes; ++c) {
    r.probs[c] = std::exp(r.probs[c] - max_logit);
    z += r.probs[c];
  }
  for (int c = 0; c < clf.classes; ++c) r.probs[c] /= z;
  return r;
}

int argmax_lowest(const std::vector<float>& v) {
  int best = 0;
  for (size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace

ShallowClassifier train_classifier(const std::vector<std::vector<float>>& embeddings,
                                   const std::vector<int>& labels, const ClassifierConfig& cfg,
                                   std::vector<CurvePoint>* curve) {
  if (embeddings.size() != labels.size() || embeddings.empty()) {
    throw std::invalid_argument("train_classifier: embeddings/labels mismatch or empty");
  }
  const int dim = static_cast<int>(embeddings[0].size());
  int classes = 0;
  std::unordered_set<int> distinct;
  for (int l : labels) {
    if (l < 0) throw std::invalid_argument("train_classifier: labels must be >= 0");
    classes = std::max(classes, l + 1);
    distinct.insert(l);
  }
  if (distinct.size() < 2) {
    throw std::invalid_argument("train_classifier: need at least two classes, got " +
                                std::to_string(distinct.size()));
  }

  Rng rng(cfg.seed);
  ShallowClassifier clf;
  clf.classes = classes;
  clf.w1 = MatF(cfg.hidden, dim);
  clf.b1 = MatF(cfg.hidden, 1);
  clf.w2 = MatF(classes, cfg.hidden);
  clf.b2 = MatF(classes, 1);
  auto init = [&](MatF& w, int fan_in) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : w.data) v = static_cast<float>(rng.uniform_real(-s, s));
  };
  init(clf.w1, dim);
  init(clf.w2, cfg.hidden);

  // Optional held-out slice for the accuracy curve.
  std::vector<int> order(embeddings.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  rng.shuffle(order);
  size_t holdout = 0;
  if (cfg.holdout_fraction > 0.0f) {
    holdout = std::min(order.size() - 1,
                       static_cast<size_t>(cfg.holdout_fraction * order.size()));
  }
  std::vector<int> train_idx(order.begin() + holdout, order.end());
  std::vector<int> eval_idx(order.begin(), order.begin() + holdout);

  std::vector<NamedParam<float>> params = {
      {"w1", &clf.w1}, {"b1", &clf.b1}, {"w2", &clf.w2}, {"b2", &clf.b2}};
  SgdMomentumState<float> opt;
  opt.lr = cfg.lr;
  opt.momentum = cfg.momentum;

  MatF dw1(cfg.hidden, dim), db1(cfg.hidden, 1), dw2(classes, cfg.hidden), db2(classes, 1);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(train_idx);
    for (size_t begin = 0; begin < train_idx.size(); begin += cfg.batch_size) {
      const size_t end = std::min(begin + cfg.batch_size, train_idx.size());
      dw1.zero();
      db1.zero();
      dw2.zero();
      db2.zero();
      const float inv = 1.0f / static_cast<float>(end - begin);
      for (size_t s = begin; s < end; ++s) {
        const auto& x = embeddings[train_idx[s]];
        const int y = labels[train_idx[s]];
        ForwardResult f = classifier_forward(clf, x);
        // d(logits) of softmax cross entropy
        std::vector<float> dlogit = f.probs;
        dlogit[y] -= 1.0f;
        std::vector<float> dhidden(cfg.hidden, 0.0f);
        for (int c = 0; c < classes; ++c) {
          const float g = dlogit[c] * inv;
          float* dw = dw2.row(c);
          const float* w = clf.w2.row(c);
          for (int hs = 0; hs < cfg.hidden; ++hs) {
            dw[hs] += g * f.hidden[hs];
            dhidden[hs] += g * w[hs];
          }
          db2(c, 0) += g;
        }
        for (int hs = 0; hs < cfg.hidden; ++hs) {
          const float dtanh = dhidden[hs] * (1.0f - f.hidden[hs] * f.hidden[hs]);
          float* dw = dw1.row(hs);
          for (int i = 0; i < dim; ++i) dw[i] += dtanh * x[i];
          db1(hs, 0) += dtanh;
        }
      }
      std::vector<const MatF*> grads = {&dw1, &db1, &dw2, &db2};
      sgd_momentum_step(params, grads, opt);
    }
    if (curve != nullptr) {
      const auto& idx = eval_idx.empty() ? train_idx : eval_idx;
      int correct = 0;
      for (int s : idx) {
        if (argmax_lowest(classifier_forward(clf, embeddings[s]).probs) == labels[s]) ++correct;
      }
      curve->push_back({epoch, static_cast<double>(correct) / idx.size()});
    }
  }
  return clf;
}

std::vector<int> classify(const ShallowClassifier& clf,
                          const std::vector<std::vector<float>>& embeddings) {
  std::vector<int> out;
  out.reserve(embeddings.size());
  for (const auto& x : embeddings) {
    if (static_cast<int>(x.size()) != clf.w1.cols) {
      throw std::invalid_argument("classify: embedding dimension mismatch");
    }
    out.push_back(argmax_lowest(classifier_forward(clf, x).probs));
  }
  return out;
}

double evaluate_accuracy(const ShallowClassifier& clf,
                         const std::vector<std::vector<float>>& embeddings,
                         const std::vector<int>& labels) {
  if (embeddings.empty()) throw std::invalid_argument("evaluate_accuracy: empty test set");
  if (embeddings.size() != labels.size()) {
    throw std::invalid_argument("evaluate_accuracy: embeddings/labels size mismatch");
  }
  const std::vector<int> pred = classify(clf, embeddings);
  int correct = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

}  // namespace cne
