#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "bioir/params_io.hpp"
#include "bioir/textprep.hpp"

namespace bioir {

inline constexpr std::size_t kNumExtraFeatures = 4;

/// [bm25, binary overlap, idf-weighted overlap, bigram overlap]
using FeatureVec = std::array<double, kNumExtraFeatures>;

/// Raw (unnormalized) extra features for a query/document pair; the BM25
/// value is computed by the caller against the index.
FeatureVec raw_extra_features(const TokenizedText& query, const TokenizedText& text,
                              double bm25, const IdfLookup& idf);

/// BM25 formula over a free-standing token sequence (used for snippets,
/// which are not index documents): sum over unique query terms of
/// idf(t) * tf * (k1+1) / (tf + k1 * (1 - b + b*len/avg_len)).
double bm25_like_score(const TokenizedText& query, const TokenizedText& text,
                       const IdfLookup& idf, double k1, double b, double avg_len);

/// Per-feature min-max normalization fitted on the training pools. Applied
/// values are clamped to [0, 1]; a degenerate feature (max == min) maps to 0.
class FeatureNormalizer {
 public:
  void fit(const std::vector<FeatureVec>& rows);  // throws on empty input
  FeatureVec apply(const FeatureVec& raw) const;
  bool fitted() const { return fitted_; }

  /// Stored in the shared params file as "<prefix>.min" / "<prefix>.max".
  void save(ParamsFile& file, const std::string& prefix) const;
  static FeatureNormalizer load(const ParamsFile& file, const std::string& prefix);

  double min_of(std::size_t i) const { return min_[i]; }
  double max_of(std::size_t i) const { return max_[i]; }

 private:
  std::array<double, kNumExtraFeatures> min_{};
  std::array<double, kNumExtraFeatures> max_{};
  bool fitted_ = false;
};

}  // namespace bioir
