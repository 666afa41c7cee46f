#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace bioir {

/// u.v / (|u||v|); 0 when either norm is below 1e-12 (OOV/pad convention).
/// Throws std::invalid_argument on length mismatch.
double cosine(std::span<const double> u, std::span<const double> v);

struct EmbeddingRef {
  std::span<const double> values;
  bool oov = false;  // true -> values is the all-zeros vector
};

/// Frozen word embeddings plus the IDF table; immutable after loading.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::size_t dim);

  /// Whitespace-separated text: one "token v1 ... vD" per line, optional
  /// first header line "count dim". Duplicate tokens: first wins (counted).
  /// Throws std::runtime_error naming the line on dimension mismatches.
  static EmbeddingStore load_embeddings(const std::string& path);
  void write_embeddings(const std::string& path) const;

  /// Adds one vector (used by builders and fixtures). Duplicate tokens keep
  /// the first vector; the duplicate counter is incremented.
  void add(const std::string& token, const std::vector<double>& values);

  /// Known token -> its row; unknown -> all-zeros with oov set.
  EmbeddingRef lookup(const std::string& token) const;

  /// IDF file: "token<TAB>idf" per line. Loading sets default_idf to the
  /// maximum observed value ("auto": unknown words are treated as rare)
  /// unless overridden afterwards via set_default_idf.
  void load_idf(const std::string& path);
  void save_idf(const std::string& path) const;
  void set_idf(const std::string& token, double idf);
  void set_default_idf(double value);
  double idf_of(const std::string& token) const;
  double default_idf() const { return default_idf_; }
  std::size_t idf_table_size() const { return idf_.size(); }

  std::size_t dim() const { return dim_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  std::size_t duplicates_skipped() const { return duplicates_skipped_; }
  bool contains(const std::string& token) const { return vocab_.count(token) != 0; }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> vocab_;  // token -> row
  std::vector<double> matrix_;                          // row-major |V| x dim
  std::vector<double> zeros_;                           // OOV row
  std::unordered_map<std::string, double> idf_;
  double default_idf_ = 0.0;
  std::size_t duplicates_skipped_ = 0;
};

}  // namespace bioir
