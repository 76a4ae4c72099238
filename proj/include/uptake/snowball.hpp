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

// Snowball English stemmer (the "Porter2" algorithm). Expects lowercase
// input; anything outside [a-z'] passes through the rules as a consonant,
// so callers should hand in clean word tokens.

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace uptake {
namespace detail {

inline bool sb_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

inline bool sb_double(std::string_view w) {
  if (w.size() < 2) return false;
  const char c = w[w.size() - 1];
  if (c != w[w.size() - 2]) return false;
  return c == 'b' || c == 'd' || c == 'f' || c == 'g' || c == 'm' ||
         c == 'n' || c == 'p' || c == 'r' || c == 't';
}

inline bool sb_valid_li(char c) {
  return c == 'c' || c == 'd' || c == 'e' || c == 'g' || c == 'h' ||
         c == 'k' || c == 'm' || c == 'n' || c == 'r' || c == 't';
}

// Short syllable at the end of w: either non-vowel + vowel + non-vowel
// (last one not w/x/Y), or a whole two-letter word starting with a vowel.
inline bool sb_ends_short_syllable(std::string_view w) {
  const std::size_t n = w.size();
  if (n == 2) return sb_vowel(w[0]) && !sb_vowel(w[1]);
  if (n < 3) return false;
  const char a = w[n - 3], b = w[n - 2], c = w[n - 1];
  return !sb_vowel(a) && sb_vowel(b) && !sb_vowel(c) && c != 'w' &&
         c != 'x' && c != 'Y';
}

inline bool sb_has_vowel(std::string_view w) {
  return std::any_of(w.begin(), w.end(), sb_vowel);
}

struct SbWord {
  std::string w;
  std::size_t p1 = 0;  // start of R1 (index; == size means null region)
  std::size_t p2 = 0;  // start of R2

  bool ends(std::string_view suf) const {
    return w.size() >= suf.size() &&
           std::string_view(w).substr(w.size() - suf.size()) == suf;
  }
  bool in_r1(std::string_view suf) const {
    return w.size() - suf.size() >= p1;
  }
  bool in_r2(std::string_view suf) const {
    return w.size() - suf.size() >= p2;
  }
  void chop(std::size_t n) { w.resize(w.size() - n); }
  void replace_suffix(std::size_t n, std::string_view repl) {
    w.resize(w.size() - n);
    w.append(repl);
  }
};

inline void sb_mark_regions(SbWord& sw) {
  const std::string& w = sw.w;
  sw.p1 = w.size();
  static constexpr std::array<std::string_view, 3> kPrefixes = {
      "gener", "commun", "arsen"};
  bool special = false;
  for (auto pre : kPrefixes) {
    if (w.size() >= pre.size() && std::string_view(w).substr(0, pre.size()) == pre) {
      sw.p1 = pre.size();
      special = true;
      break;
    }
  }
  if (!special) {
    for (std::size_t i = 1; i < w.size(); ++i) {
      if (!sb_vowel(w[i]) && sb_vowel(w[i - 1])) {
        sw.p1 = i + 1;
        break;
      }
    }
  }
  sw.p2 = w.size();
  for (std::size_t i = sw.p1 + 1; i < w.size(); ++i) {
    if (!sb_vowel(w[i]) && sb_vowel(w[i - 1])) {
      sw.p2 = i + 1;
      break;
    }
  }
}

inline bool sb_exceptional_form(std::string_view w, std::string& out) {
  struct Pair {
    std::string_view from, to;
  };
  static constexpr std::array<Pair, 18> kMap = {{
      {"skis", "ski"},     {"skies", "sky"},   {"dying", "die"},
      {"lying", "lie"},    {"tying", "tie"},   {"idly", "idl"},
      {"gently", "gentl"}, {"ugly", "ugli"},   {"early", "earli"},
      {"only", "onli"},    {"singly", "singl"},{"sky", "sky"},
      {"news", "news"},    {"howe", "howe"},   {"atlas", "atlas"},
      {"cosmos", "cosmos"},{"bias", "bias"},   {"andes", "andes"},
  }};
  for (const auto& p : kMap) {
    if (w == p.from) {
      out = p.to;
      return true;
    }
  }
  return false;
}

inline bool sb_invariant_after_1a(std::string_view w) {
  static constexpr std::array<std::string_view, 8> kStop = {
      "inning", "outing",  "canning", "herring",
      "earring", "proceed", "exceed",  "succeed"};
  return std::find(kStop.begin(), kStop.end(), w) != kStop.end();
}

inline void sb_step0(SbWord& sw) {
  for (std::string_view suf : {"'s'", "'s", "'"}) {
    if (sw.ends(suf)) {
      sw.chop(suf.size());
      return;
    }
  }
}

inline void sb_step1a(SbWord& sw) {
  if (sw.ends("sses")) {
    sw.chop(2);
  } else if (sw.ends("ied") || sw.ends("ies")) {
    // keep the e when only one letter precedes the suffix (ties -> tie)
    sw.chop(sw.w.size() > 4 ? 2 : 1);
  } else if (sw.ends("us") || sw.ends("ss")) {
    // invariant
  } else if (sw.ends("s")) {
    if (sw.w.size() >= 2 &&
        sb_has_vowel(std::string_view(sw.w).substr(0, sw.w.size() - 2))) {
      sw.chop(1);
    }
  }
}

inline void sb_step1b(SbWord& sw) {
  for (std::string_view suf : {"eedly", "eed"}) {
    if (sw.ends(suf)) {
      if (sw.in_r1(suf)) sw.replace_suffix(suf.size(), "ee");
      return;
    }
  }
  for (std::string_view suf : {"ingly", "edly", "ing", "ed"}) {
    if (!sw.ends(suf)) continue;
    if (!sb_has_vowel(
            std::string_view(sw.w).substr(0, sw.w.size() - suf.size()))) {
      return;
    }
    sw.chop(suf.size());
    if (sw.ends("at") || sw.ends("bl") || sw.ends("iz")) {
      sw.w.push_back('e');
    } else if (sb_double(sw.w)) {
      sw.chop(1);
    } else if (sw.p1 >= sw.w.size() && sb_ends_short_syllable(sw.w)) {
      sw.w.push_back('e');
    }
    return;
  }
}

inline void sb_step1c(SbWord& sw) {
  const std::size_t n = sw.w.size();
  if (n > 2 && (sw.w[n - 1] == 'y' || sw.w[n - 1] == 'Y') &&
      !sb_vowel(sw.w[n - 2])) {
    sw.w[n - 1] = 'i';
  }
}

inline void sb_step2(SbWord& sw) {
  struct Rule {
    std::string_view suf, repl;
  };
  // ordered longest-first so the first hit is the longest suffix
  static constexpr std::array<Rule, 22> kRules = {{
      {"ization", "ize"}, {"ational", "ate"}, {"fulness", "ful"},
      {"ousness", "ous"}, {"iveness", "ive"}, {"tional", "tion"},
      {"biliti", "ble"},  {"lessli", "less"}, {"entli", "ent"},
      {"ation", "ate"},   {"alism", "al"},    {"aliti", "al"},
      {"ousli", "ous"},   {"iviti", "ive"},   {"fulli", "ful"},
      {"enci", "ence"},   {"anci", "ance"},   {"abli", "able"},
      {"izer", "ize"},    {"ator", "ate"},    {"alli", "al"},
      {"bli", "ble"},
  }};
  for (const auto& r : kRules) {
    if (sw.ends(r.suf)) {
      if (sw.in_r1(r.suf)) sw.replace_suffix(r.suf.size(), r.repl);
      return;
    }
  }
  if (sw.ends("ogi")) {
    if (sw.in_r1("ogi") && sw.w.size() >= 4 && sw.w[sw.w.size() - 4] == 'l') {
      sw.chop(1);
    }
    return;
  }
  if (sw.ends("li")) {
    if (sw.in_r1("li") && sw.w.size() >= 3 &&
        sb_valid_li(sw.w[sw.w.size() - 3])) {
      sw.chop(2);
    }
  }
}

inline void sb_step3(SbWord& sw) {
  struct Rule {
    std::string_view suf, repl;
  };
  static constexpr std::array<Rule, 8> kRules = {{
      {"ational", "ate"}, {"tional", "tion"}, {"alize", "al"},
      {"icate", "ic"},    {"iciti", "ic"},    {"ical", "ic"},
      {"ness", ""},       {"ful", ""},
  }};
  if (sw.ends("ative")) {
    if (sw.in_r1("ative") && sw.in_r2("ative")) sw.chop(5);
    return;
  }
  for (const auto& r : kRules) {
    if (sw.ends(r.suf)) {
      if (sw.in_r1(r.suf)) sw.replace_suffix(r.suf.size(), r.repl);
      return;
    }
  }
}

inline void sb_step4(SbWord& sw) {
  static constexpr std::array<std::string_view, 17> kSuffixes = {
      "ement", "ance", "ence", "able", "ible", "ment", "ant", "ent",
      "ism",   "ate",  "iti",  "ous",  "ive",  "ize",  "al",  "er", "ic"};
  for (auto suf : kSuffixes) {
    if (sw.ends(suf)) {
      if (sw.in_r2(suf)) sw.chop(suf.size());
      return;
    }
  }
  if (sw.ends("ion")) {
    if (sw.in_r2("ion") && sw.w.size() >= 4 &&
        (sw.w[sw.w.size() - 4] == 's' || sw.w[sw.w.size() - 4] == 't')) {
      sw.chop(3);
    }
  }
}

inline void sb_step5(SbWord& sw) {
  if (sw.ends("e")) {
    if (sw.in_r2("e") ||
        (sw.in_r1("e") &&
         !sb_ends_short_syllable(
             std::string_view(sw.w).substr(0, sw.w.size() - 1)))) {
      sw.chop(1);
    }
  } else if (sw.ends("l")) {
    if (sw.in_r2("l") && sw.w.size() >= 2 && sw.w[sw.w.size() - 2] == 'l') {
      sw.chop(1);
    }
  }
}

}  // namespace detail

/// Stems one lowercase English token. Deterministic and total.
inline std::string snowball_stem(std::string_view token) {
  using namespace detail;
  std::string word;
  word.reserve(token.size());
  for (char c : token) word.push_back(c);
  // normalize the curly apostrophe (UTF-8 E2 80 99) to '
  for (std::size_t pos; (pos = word.find("\xE2\x80\x99")) != std::string::npos;) {
    word.replace(pos, 3, "'");
  }
  if (word.size() <= 2) return word;
  std::string special;
  if (sb_exceptional_form(word, special)) return special;
  if (word.front() == '\'') {
    word.erase(0, 1);
    if (word.size() <= 2) return word;
  }
  // mark consonant-y: at the start, or right after a vowel
  if (word.front() == 'y') word.front() = 'Y';
  for (std::size_t i = 1; i < word.size(); ++i) {
    if (word[i] == 'y' && sb_vowel(word[i - 1])) word[i] = 'Y';
  }

  SbWord sw;
  sw.w = std::move(word);
  sb_mark_regions(sw);

  sb_step0(sw);
  sb_step1a(sw);
  if (!sb_invariant_after_1a(sw.w)) {
    sb_step1b(sw);
    sb_step1c(sw);
    sb_step2(sw);
    sb_step3(sw);
    sb_step4(sw);
    sb_step5(sw);
  }
  for (char& c : sw.w) {
    if (c == 'Y') c = 'y';
  }
  return sw.w;
}

}  // namespace uptake
