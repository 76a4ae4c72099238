/*
 * Copyright 2026 the uptake authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Tokenization and the three preprocessing switches (punctuation removal,
// stopword removal, stemming) that parameterize the token-based metrics.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "uptake/error.hpp"
#include "uptake/snowball.hpp"

namespace uptake {

/// Literal marker transcribers insert for low-quality audio.
inline constexpr const char* kInaudibleMarker = "[Inaudible]";

struct TokenSequence {
  std::vector<std::string> tokens;
  std::string source_text;
};

struct PreprocessProfile {
  bool remove_punct = false;     // P
  bool remove_stopwords = false; // S
  bool stem = false;             // T
  std::string stopword_list_id = "english";
};

namespace detail {

inline bool ascii_alnum(std::uint32_t cp) {
  return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
         (cp >= 'A' && cp <= 'Z');
}

// Decodes the codepoint starting at i, advancing i past it. Bytes that do
// not form valid UTF-8 are passed through one at a time, so this is total.
inline std::uint32_t next_codepoint(std::string_view s, std::size_t& i) {
  const auto byte = [&](std::size_t k) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(s[k]));
  };
  const std::uint32_t b0 = byte(i);
  std::size_t len = 1;
  std::uint32_t cp = b0;
  if (b0 >= 0xF0) {
    len = 4;
    cp = b0 & 0x07u;
  } else if (b0 >= 0xE0) {
    len = 3;
    cp = b0 & 0x0Fu;
  } else if (b0 >= 0xC0) {
    len = 2;
    cp = b0 & 0x1Fu;
  }
  if (i + len > s.size()) len = 1, cp = b0;
  for (std::size_t k = 1; k < len; ++k) {
    const std::uint32_t bk = byte(i + k);
    if ((bk & 0xC0u) != 0x80u) {  // broken continuation: emit lead byte alone
      len = 1;
      cp = b0;
      break;
    }
    cp = (cp << 6) | (bk & 0x3Fu);
  }
  i += len;
  return cp;
}

}  // namespace detail

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

/// True when every codepoint in the token is non-alphanumeric.
inline bool is_punct_token(std::string_view tok) {
  if (tok.empty()) return false;
  std::size_t i = 0;
  while (i < tok.size()) {
    if (detail::ascii_alnum(detail::next_codepoint(tok, i))) return false;
  }
  return true;
}

/// Lowercases, splits on whitespace, and peels leading/trailing punctuation
/// codepoints off each chunk into their own single-character tokens.
/// Internal punctuation (apostrophes, hyphens, ...) stays inside the token.
/// A chunk equal to `marker` (case-insensitive) is kept whole.
inline TokenSequence tokenize(std::string_view text,
                              std::string_view marker = kInaudibleMarker) {
  TokenSequence seq;
  seq.source_text.assign(text.begin(), text.end());
  const std::string lowered = ascii_lower(text);
  const std::string marker_lc = ascii_lower(marker);

  std::size_t pos = 0;
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
  };
  while (pos < lowered.size()) {
    while (pos < lowered.size() && is_space(lowered[pos])) ++pos;
    if (pos >= lowered.size()) break;
    std::size_t end = pos;
    while (end < lowered.size() && !is_space(lowered[end])) ++end;
    std::string_view chunk(lowered.data() + pos, end - pos);
    pos = end;

    if (!marker_lc.empty() && chunk == marker_lc) {
      seq.tokens.emplace_back(chunk);
      continue;
    }

    // codepoint boundaries of the chunk
    std::vector<std::size_t> starts;
    std::vector<bool> punct;
    std::size_t i = 0;
    while (i < chunk.size()) {
      starts.push_back(i);
      punct.push_back(!detail::ascii_alnum(detail::next_codepoint(chunk, i)));
    }
    starts.push_back(chunk.size());

    std::size_t lo = 0, hi = punct.size();
    while (lo < hi && punct[lo]) ++lo;
    while (hi > lo && punct[hi - 1]) --hi;
    for (std::size_t k = 0; k < lo; ++k) {
      seq.tokens.emplace_back(chunk.substr(starts[k], starts[k + 1] - starts[k]));
    }
    if (lo < hi) {
      seq.tokens.emplace_back(chunk.substr(starts[lo], starts[hi] - starts[lo]));
    }
    for (std::size_t k = hi; k < punct.size(); ++k) {
      seq.tokens.emplace_back(chunk.substr(starts[k], starts[k + 1] - starts[k]));
    }
  }
  return seq;
}

inline std::size_t count_non_punct(const TokenSequence& seq) {
  std::size_t n = 0;
  for (const auto& t : seq.tokens) {
    if (!is_punct_token(t)) ++n;
  }
  return n;
}

// ---------------------------------------------------------------------------
// Stopword lists

using StopwordList = std::unordered_set<std::string>;

/// One token per line; blank lines and `#` comments ignored.
inline StopwordList parse_stopword_list(std::istream& in) {
  StopwordList words;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::size_t b = 0, e = line.size();
    while (b < e && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(line[e - 1]))) --e;
    if (e > b) words.insert(ascii_lower(std::string_view(line).substr(b, e - b)));
  }
  return words;
}

inline StopwordList load_stopword_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open stopword list: " + path);
  return parse_stopword_list(in);
}

/// The 127-word English list shipped as data/stopwords/english.txt (kept in
/// sync by a test); embedded so library users need no data directory.
inline const StopwordList& english_stopwords() {
  static const StopwordList kList = {
      "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you",
      "your", "yours", "yourself", "yourselves", "he", "him", "his",
      "himself", "she", "her", "hers", "herself", "it", "its", "itself",
      "they", "them", "their", "theirs", "themselves", "what", "which",
      "who", "whom", "this", "that", "these", "those", "am", "is", "are",
      "was", "were", "be", "been", "being", "have", "has", "had", "having",
      "do", "does", "did", "doing", "a", "an", "the", "and", "but", "if",
      "or", "because", "as", "until", "while", "of", "at", "by", "for",
      "with", "about", "against", "between", "into", "through", "during",
      "before", "after", "above", "below", "to", "from", "up", "down", "in",
      "out", "on", "off", "over", "under", "again", "further", "then",
      "once", "here", "there", "when", "where", "why", "how", "all", "any",
      "both", "each", "few", "more", "most", "other", "some", "such", "no",
      "nor", "not", "only", "own", "same", "so", "than", "too", "very", "s",
      "t", "can", "will", "just", "don", "should", "now"};
  return kList;
}

namespace detail {

struct StopwordRegistry {
  std::mutex mu;
  std::unordered_map<std::string, StopwordList> lists;
};

inline StopwordRegistry& stopword_registry() {
  static StopwordRegistry reg;
  static const bool seeded = [] {
    reg.lists.emplace("english", english_stopwords());
    return true;
  }();
  (void)seeded;
  return reg;
}

}  // namespace detail

/// Registers (or replaces) a named list. Not safe to call concurrently with
/// profile application; do registration up front.
inline void register_stopword_list(const std::string& id, StopwordList words) {
  auto& reg = detail::stopword_registry();
  const std::lock_guard<std::mutex> lock(reg.mu);
  reg.lists[id] = std::move(words);
}

inline const StopwordList& stopword_list(const std::string& id) {
  auto& reg = detail::stopword_registry();
  const std::lock_guard<std::mutex> lock(reg.mu);
  const auto it = reg.lists.find(id);
  if (it == reg.lists.end()) throw error("unknown stopword list: " + id);
  return it->second;  // node-based map: reference outlives the lock
}

// ---------------------------------------------------------------------------
// Profiles

/// Parses a CLI profile spec: any subset of "PST" (order-free), or the empty
/// string / "none" for the identity profile.
inline PreprocessProfile parse_profile_spec(std::string_view spec) {
  PreprocessProfile p;
  if (spec == "none") return p;
  for (const char c : spec) {
    switch (c) {
      case 'P': p.remove_punct = true; break;
      case 'S': p.remove_stopwords = true; break;
      case 'T': p.stem = true; break;
      default:
        throw error(std::string("bad profile spec character '") + c +
                    "' (expected subset of \"PST\")");
    }
  }
  return p;
}

inline std::string profile_spec(const PreprocessProfile& p) {
  std::string s;
  if (p.remove_punct) s += 'P';
  if (p.remove_stopwords) s += 'S';
  if (p.stem) s += 'T';
  return s.empty() ? "none" : s;
}

/// Applies the switches in fixed order: punctuation -> stopwords -> stemming.
/// May return an empty sequence; callers must handle that.
inline TokenSequence apply_profile(const TokenSequence& seq,
                                   const PreprocessProfile& profile) {
  TokenSequence out;
  out.source_text = seq.source_text;
  out.tokens.reserve(seq.tokens.size());
  const StopwordList* stop =
      profile.remove_stopwords ? &stopword_list(profile.stopword_list_id)
                               : nullptr;
  for (const auto& tok : seq.tokens) {
    if (profile.remove_punct && is_punct_token(tok)) continue;
    if (stop && stop->count(tok)) continue;
    out.tokens.push_back(profile.stem ? snowball_stem(tok) : tok);
  }
  return out;
}

// ---------------------------------------------------------------------------
// N-grams

/// Contiguous n-grams with multiplicity, keyed by the space-joined tuple
/// (tokens never contain whitespace, so the join is unambiguous). Empty when
/// the sequence is shorter than n.
inline std::unordered_map<std::string, int> ngram_counts(
    const std::vector<std::string>& tokens, int n) {
  if (n < 1) throw error("ngram order must be >= 1");
  std::unordered_map<std::string, int> counts;
  const std::size_t un = static_cast<std::size_t>(n);
  if (tokens.size() < un) return counts;
  for (std::size_t i = 0; i + un <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t k = 1; k < un; ++k) {
      key += ' ';
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace uptake
