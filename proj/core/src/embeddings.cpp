#include "bioir/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace bioir {

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine: length mismatch (" + std::to_string(u.size()) +
                                " vs " + std::to_string(v.size()) + ")");
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  const double norm_u = std::sqrt(nu);
  const double norm_v = std::sqrt(nv);
  if (norm_u < 1e-12 || norm_v < 1e-12) return 0.0;
  return dot / (norm_u * norm_v);
}

EmbeddingStore::EmbeddingStore(std::size_t dim) : dim_(dim), zeros_(dim, 0.0) {}

void EmbeddingStore::add(const std::string& token, const std::vector<double>& values) {
  if (dim_ == 0) {
    dim_ = values.size();
    zeros_.assign(dim_, 0.0);
  }
  if (values.size() != dim_) {
    throw std::invalid_argument("EmbeddingStore::add: vector for '" + token + "' has dim " +
                                std::to_string(values.size()) + ", store has " +
                                std::to_string(dim_));
  }
  if (vocab_.count(token) != 0) {
    duplicates_skipped_ += 1;
    return;
  }
  vocab_.emplace(token, vocab_.size());
  matrix_.insert(matrix_.end(), values.begin(), values.end());
}

EmbeddingRef EmbeddingStore::lookup(const std::string& token) const {
  const auto it = vocab_.find(token);
  if (it == vocab_.end()) {
    return EmbeddingRef{std::span<const double>(zeros_), true};
  }
  return EmbeddingRef{std::span<const double>(matrix_).subspan(it->second * dim_, dim_), false};
}

namespace {

bool parse_header(const std::string& line) {
  std::istringstream ss(line);
  long long a = 0, b = 0;
  std::string extra;
  if (!(ss >> a >> b)) return false;
  if (ss >> extra) return false;
  return a >= 0 && b >= 1;
}

}  // namespace

EmbeddingStore EmbeddingStore::load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_embeddings: cannot open " + path);
  EmbeddingStore store;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    // Only the very first line may be a "count dim" header.
    if (first && parse_header(line)) {
      first = false;
      continue;
    }
    first = false;
    std::istringstream ss(line);
    std::string token;
    if (!(ss >> token)) continue;
    values.clear();
    double v = 0.0;
    while (ss >> v) values.push_back(v);
    if (values.empty()) {
      throw std::runtime_error("load_embeddings: no values on line " + std::to_string(line_no) +
                               " of " + path);
    }
    if (store.dim_ != 0 && values.size() != store.dim_) {
      throw std::runtime_error("load_embeddings: line " + std::to_string(line_no) + " of " +
                               path + " has " + std::to_string(values.size()) +
                               " values, expected " + std::to_string(store.dim_));
    }
    store.add(token, values);
  }
  return store;
}

void EmbeddingStore::write_embeddings(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_embeddings: cannot open " + path);
  out << std::setprecision(17);
  // Rows in insertion (row-index) order for a stable file.
  std::vector<const std::string*> tokens(vocab_.size(), nullptr);
  for (const auto& [token, row] : vocab_) tokens[row] = &token;
  for (std::size_t row = 0; row < tokens.size(); ++row) {
    out << *tokens[row];
    for (std::size_t d = 0; d < dim_; ++d) out << ' ' << matrix_[row * dim_ + d];
    out << '\n';
  }
}

void EmbeddingStore::load_idf(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_idf: cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  double max_idf = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error("load_idf: missing tab on line " + std::to_string(line_no) +
                               " of " + path);
    }
    const std::string token = line.substr(0, tab);
    double value = 0.0;
    try {
      value = std::stod(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw std::runtime_error("load_idf: bad value on line " + std::to_string(line_no) +
                               " of " + path);
    }
    idf_[token] = value;
    max_idf = std::max(max_idf, value);
  }
  default_idf_ = max_idf;
}

void EmbeddingStore::save_idf(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_idf: cannot open " + path);
  out << std::setprecision(17);
  std::vector<const std::string*> tokens;
  tokens.reserve(idf_.size());
  for (const auto& [token, value] : idf_) tokens.push_back(&token);
  std::sort(tokens.begin(), tokens.end(),
            [](const std::string* a, const std::string* b) { return *a < *b; });
  for (const std::string* t : tokens) out << *t << '\t' << idf_.at(*t) << '\n';
}

void EmbeddingStore::set_idf(const std::string& token, double idf) {
  idf_[token] = idf;
  default_idf_ = std::max(default_idf_, idf);
}

void EmbeddingStore::set_default_idf(double value) { default_idf_ = value; }

double EmbeddingStore::idf_of(const std::string& token) const {
  const auto it = idf_.find(token);
  return it != idf_.end() ? it->second : default_idf_;
}

}  // namespace bioir
