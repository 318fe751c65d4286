#include "cne/sampling.hpp"

#include <algorithm>
#include <stdexcept>

namespace cne {

std::optional<int> sample_prediction_point(int doc_len, int h, int epsilon, Rng& rng) {
  if (!eligible_for_training(doc_len, h)) return std::nullopt;
  const int lo = effective_offset(doc_len, h, epsilon);
  const int hi = doc_len - h;
  return rng.uniform_int(lo, hi);
}

std::vector<int> sample_negatives(int vocab_size, const std::unordered_set<int>& excluded,
                                  int count, Rng& rng) {
  int eligible = vocab_size;
  for (int id : excluded) {
    if (id >= 0 && id < vocab_size) --eligible;
  }
  if (eligible < count) {
    throw std::runtime_error("sample_negatives: need " + std::to_string(count) +
                             " ids but only " + std::to_string(eligible) + " eligible");
  }
  std::unordered_set<int> chosen;
  std::vector<int> out;
  out.reserve(count);
  // Rejection sampling; cheap while count + |excluded| << vocab_size. Falls
  // back to explicit enumeration when the eligible pool is nearly exhausted.
  if (eligible > 2 * count) {
    while (static_cast<int>(out.size()) < count) {
      const int id = static_cast<int>(rng.uniform_u64(static_cast<uint64_t>(vocab_size)));
      if (excluded.count(id) != 0 || !chosen.insert(id).second) continue;
      out.push_back(id);
    }
  } else {
    std::vector<int> pool;
    pool.reserve(eligible);
    for (int id = 0; id < vocab_size; ++id) {
      if (excluded.count(id) == 0) pool.push_back(id);
    }
    rng.shuffle(pool);
    out.assign(pool.begin(), pool.begin() + count);
  }
  return out;
}

std::vector<std::vector<int>> plan_epoch(const std::vector<Document>& docs, int h,
                                         int batch_size, Rng& rng) {
  if (batch_size < 1) throw std::invalid_argument("plan_epoch: batch_size must be >= 1");
  // Bucket eligible documents by floor(log2(length)) so batch members share a
  // prediction-point interval of useful width.
  std::vector<std::pair<int, int>> bucketed;  // (bucket, doc index)
  for (size_t d = 0; d < docs.size(); ++d) {
    const int len = docs[d].length();
    if (!eligible_for_training(len, h)) continue;
    int bucket = 0;
    while ((2 << bucket) <= len) ++bucket;  // len in [2^bucket, 2^(bucket+1))
    bucketed.emplace_back(bucket, static_cast<int>(d));
  }
  if (bucketed.empty()) {
    throw std::runtime_error("plan_epoch: no document is long enough to train on (need length > h+1)");
  }
  std::stable_sort(bucketed.begin(), bucketed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<std::vector<int>> batches;
  size_t i = 0;
  while (i < bucketed.size()) {
    size_t j = i;
    while (j < bucketed.size() && bucketed[j].first == bucketed[i].first) ++j;
    std::vector<int> members;
    members.reserve(j - i);
    for (size_t t = i; t < j; ++t) members.push_back(bucketed[t].second);
    rng.shuffle(members);
    for (size_t begin = 0; begin < members.size(); begin += batch_size) {
      const size_t end = std::min(begin + batch_size, members.size());
      batches.emplace_back(members.begin() + begin, members.begin() + end);
    }
    i = j;
  }
  rng.shuffle(batches);
  return batches;
}

TrainingSample make_minibatch(const std::vector<Document>& docs,
                              const std::vector<int>& batch_doc_indices, int h, int epsilon,
                              int neg_count, int vocab_size, Rng& rng) {
  if (batch_doc_indices.empty()) throw std::invalid_argument("make_minibatch: empty batch");
  TrainingSample sample;
  sample.doc_indices = batch_doc_indices;

  // Shared prediction point: intersect the members' intervals. Every member
  // satisfies i <= len - h by construction; when the offsets cannot all be
  // honored simultaneously the lower bound clamps to the shortest member.
  int hi = docs[batch_doc_indices[0]].length() - h;
  int lo = 2;
  for (int d : batch_doc_indices) {
    const int len = docs[d].length();
    hi = std::min(hi, len - h);
    lo = std::max(lo, effective_offset(len, h, epsilon));
  }
  lo = std::min(lo, hi);
  sample.prediction_point = rng.uniform_int(lo, hi);

  // Positive targets: words at positions i+1 .. i+h of each member, kept as a
  // multiset so repeated words contribute repeated terms.
  const int i = sample.prediction_point;
  std::unordered_set<int> exclusion;
  sample.positives.reserve(batch_doc_indices.size());
  for (int d : batch_doc_indices) {
    const auto& ids = docs[d].word_ids;
    std::vector<int> pos(ids.begin() + i, ids.begin() + i + h);
    for (int w : pos) exclusion.insert(w);
    sample.positives.push_back(std::move(pos));
  }
  sample.negatives = sample_negatives(vocab_size, exclusion, neg_count, rng);
  return sample;
}

}  // namespace cne
