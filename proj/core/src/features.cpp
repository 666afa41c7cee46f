#include "bioir/features.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace bioir {

FeatureVec raw_extra_features(const TokenizedText& query, const TokenizedText& text,
                              double bm25, const IdfLookup& idf) {
  const std::array<double, 3> overlaps = overlap_features(query, text, idf);
  return {bm25, overlaps[0], overlaps[1], overlaps[2]};
}

double bm25_like_score(const TokenizedText& query, const TokenizedText& text,
                       const IdfLookup& idf, double k1, double b, double avg_len) {
  if (avg_len <= 0.0) throw std::invalid_argument("bm25_like_score: avg_len must be positive");
  std::set<std::string> seen;
  std::vector<std::string> unique_q;
  for (const auto& t : query.tokens) {
    if (seen.insert(t).second) unique_q.push_back(t);
  }
  const double len = static_cast<double>(text.size());
  double score = 0.0;
  for (const std::string& term : unique_q) {
    std::size_t count = 0;
    for (const auto& t : text.tokens) {
      if (t == term) ++count;
    }
    if (count == 0) continue;
    const double tf = static_cast<double>(count);
    score += idf(term) * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len / avg_len));
  }
  return score;
}

void FeatureNormalizer::fit(const std::vector<FeatureVec>& rows) {
  if (rows.empty()) throw std::invalid_argument("FeatureNormalizer::fit: no rows");
  min_ = rows.front();
  max_ = rows.front();
  for (const FeatureVec& row : rows) {
    for (std::size_t i = 0; i < kNumExtraFeatures; ++i) {
      min_[i] = std::min(min_[i], row[i]);
      max_[i] = std::max(max_[i], row[i]);
    }
  }
  fitted_ = true;
}

FeatureVec FeatureNormalizer::apply(const FeatureVec& raw) const {
  if (!fitted_) throw std::logic_error("FeatureNormalizer::apply before fit/load");
  FeatureVec out{};
  for (std::size_t i = 0; i < kNumExtraFeatures; ++i) {
    const double range = max_[i] - min_[i];
    if (range < 1e-12) {
      out[i] = 0.0;
    } else {
      out[i] = std::clamp((raw[i] - min_[i]) / range, 0.0, 1.0);
    }
  }
  return out;
}

void FeatureNormalizer::save(ParamsFile& file, const std::string& prefix) const {
  if (!fitted_) throw std::logic_error("FeatureNormalizer::save before fit");
  file.put(prefix + ".min", Tensor({kNumExtraFeatures},
                                   std::vector<double>(min_.begin(), min_.end())));
  file.put(prefix + ".max", Tensor({kNumExtraFeatures},
                                   std::vector<double>(max_.begin(), max_.end())));
}

FeatureNormalizer FeatureNormalizer::load(const ParamsFile& file, const std::string& prefix) {
  const Tensor& tmin = file.at(prefix + ".min");
  const Tensor& tmax = file.at(prefix + ".max");
  if (tmin.size() != kNumExtraFeatures || tmax.size() != kNumExtraFeatures) {
    throw std::runtime_error("FeatureNormalizer::load: bad tensor size under '" + prefix + "'");
  }
  FeatureNormalizer norm;
  for (std::size_t i = 0; i < kNumExtraFeatures; ++i) {
    norm.min_[i] = tmin[i];
    norm.max_[i] = tmax[i];
  }
  norm.fitted_ = true;
  return norm;
}

}  // namespace bioir
