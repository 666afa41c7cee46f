#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace bioir {

/// Lowercased tokens plus the [start, end) character span of each token in
/// the original text. Spans are non-overlapping and strictly increasing.
struct TokenizedText {
  std::vector<std::string> tokens;
  std::vector<std::pair<std::size_t, std::size_t>> spans;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
};

struct SentenceSpan {
  std::size_t start_char = 0;
  std::size_t end_char = 0;  // exclusive
  std::string text;
};

/// Lowercases ASCII letters, replaces the punctuation characters
///   . , ? ; * ! % ^ & + ( ) [ ] { } : - " ' / \ | < > = # @ ~
/// with spaces, and emits maximal nonblank runs as tokens. Digits are kept;
/// bytes outside ASCII pass through untouched.
TokenizedText tokenize(const std::string& text);

/// Splits after . ! ? when followed by whitespace and an uppercase letter or
/// digit. A '.' does not split when the word before it is a known
/// abbreviation (e.g, i.e, fig, et al., ...) or a single capital letter
/// ("E. coli"). Spans are trimmed of surrounding whitespace.
std::vector<SentenceSpan> split_sentences(const std::string& text);

using IdfLookup = std::function<double(const std::string&)>;

/// Traditional IR overlap features over unique tokens:
///   [0] binary:       |unique q-tokens in doc| / |unique q-tokens|
///   [1] idf-weighted: sum of idf over matched unique q-tokens / sum over all
///   [2] bigram:       |unique query bigrams adjacent in doc| / max(1, |unique query bigrams|)
/// An empty query yields all zeros.
std::array<double, 3> overlap_features(const TokenizedText& query,
                                       const TokenizedText& doc_or_snippet,
                                       const IdfLookup& idf);

/// Pluggable token normalizer applied before indexing; defaults to identity.
using Stemmer = std::function<std::string(const std::string&)>;
Stemmer identity_stemmer();

/// Default English stopword list used by the indexing stage.
const std::vector<std::string>& default_stopwords();

}  // namespace bioir
