#include "bioir/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace bioir {

namespace {

bool is_stripped_punct(char c) {
  static const std::string kPunct = ".,?;*!%^&+()[]{}:-\"'/\\|<>=#@~";
  return kPunct.find(c) != std::string::npos;
}

bool is_blank(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_upper_ascii(char c) { return c >= 'A' && c <= 'Z'; }
bool is_digit_ascii(char c) { return c >= '0' && c <= '9'; }

char lower_ascii(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

/// Abbreviations whose trailing '.' never ends a sentence. Compared against
/// the lowercased nonblank run preceding the period.
const std::unordered_set<std::string>& abbreviations() {
  static const std::unordered_set<std::string> kAbbrev = {
      "e.g", "i.e", "cf", "vs", "etc", "al", "fig", "figs", "eq", "eqs",
      "ref", "refs", "no", "vol", "ca", "approx", "dr", "mr", "mrs", "ms",
      "prof", "st", "jr", "sr", "inc", "ltd", "co", "dept", "univ"};
  return kAbbrev;
}

}  // namespace

TokenizedText tokenize(const std::string& text) {
  TokenizedText out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && (is_blank(text[i]) || is_stripped_punct(text[i]))) ++i;
    if (i >= n) break;
    const std::size_t start = i;
    std::string token;
    while (i < n && !is_blank(text[i]) && !is_stripped_punct(text[i])) {
      token.push_back(lower_ascii(text[i]));
      ++i;
    }
    out.tokens.push_back(std::move(token));
    out.spans.emplace_back(start, i);
  }
  return out;
}

std::vector<SentenceSpan> split_sentences(const std::string& text) {
  const std::size_t n = text.size();
  std::vector<std::size_t> boundaries;  // index one past each sentence-ending mark

  for (std::size_t i = 0; i < n; ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    while (j < n && is_blank(text[j])) ++j;
    if (j == i + 1 || j >= n) continue;  // needs whitespace then another char
    if (!is_upper_ascii(text[j]) && !is_digit_ascii(text[j])) continue;
    if (c == '.') {
      std::size_t w = i;
      while (w > 0 && !is_blank(text[w - 1])) --w;
      std::string word;
      for (std::size_t p = w; p < i; ++p) word.push_back(lower_ascii(text[p]));
      if (abbreviations().count(word) != 0) continue;
      if (i - w == 1 && is_upper_ascii(text[w])) continue;  // "E. coli"
    }
    boundaries.push_back(i + 1);
  }
  boundaries.push_back(n);

  std::vector<SentenceSpan> out;
  std::size_t start = 0;
  for (const std::size_t end : boundaries) {
    std::size_t s = start;
    std::size_t e = end;
    while (s < e && is_blank(text[s])) ++s;
    while (e > s && is_blank(text[e - 1])) --e;
    if (s < e) {
      out.push_back(SentenceSpan{s, e, text.substr(s, e - s)});
    }
    start = end;
  }
  return out;
}

std::array<double, 3> overlap_features(const TokenizedText& query,
                                       const TokenizedText& doc_or_snippet,
                                       const IdfLookup& idf) {
  if (query.empty()) return {0.0, 0.0, 0.0};

  std::vector<std::string> unique_q;
  std::unordered_set<std::string> seen;
  for (const auto& t : query.tokens) {
    if (seen.insert(t).second) unique_q.push_back(t);
  }
  std::unordered_set<std::string> doc_terms(doc_or_snippet.tokens.begin(),
                                            doc_or_snippet.tokens.end());

  double matched = 0.0;
  double idf_matched = 0.0;
  double idf_total = 0.0;
  for (const auto& t : unique_q) {
    const double w = idf(t);
    idf_total += w;
    if (doc_terms.count(t) != 0) {
      matched += 1.0;
      idf_matched += w;
    }
  }

  std::unordered_set<std::string> q_bigrams;
  for (std::size_t i = 0; i + 1 < query.tokens.size(); ++i) {
    q_bigrams.insert(query.tokens[i] + " " + query.tokens[i + 1]);
  }
  std::unordered_set<std::string> d_bigrams;
  for (std::size_t i = 0; i + 1 < doc_or_snippet.tokens.size(); ++i) {
    d_bigrams.insert(doc_or_snippet.tokens[i] + " " + doc_or_snippet.tokens[i + 1]);
  }
  double bigram_hits = 0.0;
  for (const auto& bg : q_bigrams) {
    if (d_bigrams.count(bg) != 0) bigram_hits += 1.0;
  }

  const double binary = matched / static_cast<double>(unique_q.size());
  const double idf_weighted = idf_total > 0.0 ? idf_matched / idf_total : 0.0;
  const double bigram =
      bigram_hits / std::max<double>(1.0, static_cast<double>(q_bigrams.size()));
  return {binary, idf_weighted, bigram};
}

Stemmer identity_stemmer() {
  return [](const std::string& token) { return token; };
}

const std::vector<std::string>& default_stopwords() {
  static const std::vector<std::string> kStopwords = {
      "a",    "an",   "and",  "are",  "as",   "at",   "be",   "by",   "can",
      "did",  "do",   "does", "for",  "from", "had",  "has",  "have", "in",
      "is",   "it",   "its",  "of",   "on",   "or",   "that", "the",  "their",
      "there", "these", "they", "this", "to",  "was",  "we",   "were", "what",
      "when", "which", "who",  "will", "with"};
  return kStopwords;
}

}  // namespace bioir
