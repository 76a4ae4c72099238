#!/usr/bin/env python3
"""Regenerates snowball_pairs.tsv, the oracle fixture for the C++ stemmer.

Independent reference implementation of the Snowball (Porter2) English
stemming algorithm, following the published algorithm description. Kept
separate from the C++ code on purpose: the fixture it emits is what the
unit tests compare against.

Usage: python3 gen_snowball_fixture.py > snowball_pairs.tsv
"""

import sys

VOWELS = "aeiouy"
DOUBLES = ("bb", "dd", "ff", "gg", "mm", "nn", "pp", "rr", "tt")
LI_ENDING = "cdeghkmnrt"

SPECIAL = {
    "skis": "ski", "skies": "sky", "dying": "die", "lying": "lie",
    "tying": "tie", "idly": "idl", "gently": "gentl", "ugly": "ugli",
    "early": "earli", "only": "onli", "singly": "singl",
    "sky": "sky", "news": "news", "howe": "howe", "atlas": "atlas",
    "cosmos": "cosmos", "bias": "bias", "andes": "andes",
}

STOP_AFTER_1A = {
    "inning", "outing", "canning", "herring", "earring",
    "proceed", "exceed", "succeed",
}


def is_vowel(c):
    return c in VOWELS


def ends_in_short_syllable(w):
    if len(w) == 2:
        return is_vowel(w[0]) and not is_vowel(w[1])
    if len(w) >= 3:
        return (not is_vowel(w[-3]) and is_vowel(w[-2])
                and not is_vowel(w[-1]) and w[-1] not in "wxY")
    return False


def mark_regions(w):
    p1 = len(w)
    for pre in ("gener", "commun", "arsen"):
        if w.startswith(pre):
            p1 = len(pre)
            break
    else:
        for i in range(1, len(w)):
            if not is_vowel(w[i]) and is_vowel(w[i - 1]):
                p1 = i + 1
                break
    p2 = len(w)
    for i in range(p1 + 1, len(w)):
        if not is_vowel(w[i]) and is_vowel(w[i - 1]):
            p2 = i + 1
            break
    return p1, p2


def stem(word):
    word = word.lower().replace("’", "'")
    if len(word) <= 2:
        return word
    if word in SPECIAL:
        return SPECIAL[word]
    if word.startswith("'"):
        word = word[1:]
        if len(word) <= 2:
            return word
    # mark consonant-y as Y
    if word.startswith("y"):
        word = "Y" + word[1:]
    chars = list(word)
    for i in range(1, len(chars)):
        if chars[i] == "y" and is_vowel(chars[i - 1]):
            chars[i] = "Y"
    word = "".join(chars)

    p1, p2 = mark_regions(word)

    def in_r1(suffix):
        return len(word) - len(suffix) >= p1

    def in_r2(suffix):
        return len(word) - len(suffix) >= p2

    # step 0
    for suf in ("'s'", "'s", "'"):
        if word.endswith(suf):
            word = word[: -len(suf)]
            break

    # step 1a
    if word.endswith("sses"):
        word = word[:-2]
    elif word.endswith(("ied", "ies")):
        word = word[:-2] if len(word) > 4 else word[:-1]
    elif word.endswith(("us", "ss")):
        pass
    elif word.endswith("s"):
        if any(is_vowel(c) for c in word[:-2]):
            word = word[:-1]

    if word in STOP_AFTER_1A:
        return word.replace("Y", "y")

    # step 1b
    step1b_suffixes = ("eedly", "ingly", "edly", "eed", "ing", "ed")
    for suf in step1b_suffixes:
        if word.endswith(suf):
            if suf in ("eed", "eedly"):
                if in_r1(suf):
                    word = word[: -len(suf)] + "ee"
            else:
                stemmed = word[: -len(suf)]
                if any(is_vowel(c) for c in stemmed):
                    word = stemmed
                    if word.endswith(("at", "bl", "iz")):
                        word += "e"
                    elif word.endswith(DOUBLES):
                        word = word[:-1]
                    elif p1 >= len(word) and ends_in_short_syllable(word):
                        word += "e"
            break

    # step 1c
    if len(word) > 2 and word[-1] in "yY" and not is_vowel(word[-2]):
        word = word[:-1] + "i"

    # step 2 (longest suffix wins; all require the suffix in R1)
    step2 = [
        ("ization", "ize"), ("ational", "ate"), ("fulness", "ful"),
        ("ousness", "ous"), ("iveness", "ive"), ("tional", "tion"),
        ("biliti", "ble"), ("lessli", "less"), ("entli", "ent"),
        ("ation", "ate"), ("alism", "al"), ("aliti", "al"),
        ("ousli", "ous"), ("iviti", "ive"), ("fulli", "ful"),
        ("enci", "ence"), ("anci", "ance"), ("abli", "able"),
        ("izer", "ize"), ("ator", "ate"), ("alli", "al"),
        ("bli", "ble"), ("ogi", None), ("li", None),
    ]
    for suf, repl in step2:
        if word.endswith(suf):
            if in_r1(suf):
                if suf == "ogi":
                    if len(word) > 3 and word[-4] == "l":
                        word = word[:-1]
                elif suf == "li":
                    if len(word) > 2 and word[-3] in LI_ENDING:
                        word = word[:-2]
                else:
                    word = word[: -len(suf)] + repl
            break

    # step 3
    step3 = [
        ("ational", "ate"), ("tional", "tion"), ("alize", "al"),
        ("icate", "ic"), ("iciti", "ic"), ("ative", ""),
        ("ical", "ic"), ("ness", ""), ("ful", ""),
    ]
    for suf, repl in step3:
        if word.endswith(suf):
            if in_r1(suf):
                if suf == "ative":
                    if in_r2(suf):
                        word = word[:-5]
                else:
                    word = word[: -len(suf)] + repl
            break

    # step 4
    step4 = ("ement", "ance", "ence", "able", "ible", "ment", "ant",
             "ent", "ism", "ate", "iti", "ous", "ive", "ize", "ion",
             "al", "er", "ic")
    for suf in step4:
        if word.endswith(suf):
            if in_r2(suf):
                if suf == "ion":
                    if len(word) > 3 and word[-4] in "st":
                        word = word[:-3]
                else:
                    word = word[: -len(suf)]
            break

    # step 5
    if word.endswith("e"):
        if in_r2("e") or (in_r1("e")
                          and not ends_in_short_syllable(word[:-1])):
            word = word[:-1]
    elif word.endswith("l"):
        if in_r2("l") and len(word) > 1 and word[-2] == "l":
            word = word[:-1]

    return word.replace("Y", "y")


SUFFIXES = (
    "", "s", "es", "ed", "ing", "ly", "er", "est", "ment", "ness",
    "ation", "ization", "ize", "ful", "fulness", "ous", "ously",
    "ical", "ically", "ive", "iveness", "ity", "ities", "able",
    "ably", "ability", "ance", "ence", "ions", "ies", "ied",
    "ingly", "edly", "'s", "'s'",
)


def pseudo_words(n, seed=20240901):
    # xorshift64*, so the fixture regenerates identically anywhere
    state = seed

    def rng(bound):
        nonlocal state
        state ^= (state >> 12) & 0xFFFFFFFFFFFFFFFF
        state = (state ^ (state << 25)) & 0xFFFFFFFFFFFFFFFF
        state ^= state >> 27
        return ((state * 0x2545F4914F6CDD1D) >> 33) % bound

    cons = "bcdfghjklmnpqrstvwxz"
    vows = "aeiouy"
    out = []
    for _ in range(n):
        w = []
        for _ in range(2 + rng(4)):
            w.append(cons[rng(len(cons))])
            w.append(vows[rng(len(vows))])
            if rng(3) == 0:
                w.append(cons[rng(len(cons))])
        word = "".join(w)
        if rng(5) == 0:
            word += SUFFIXES[rng(len(SUFFIXES))]
        if rng(20) == 0:
            word = "'" + word
        out.append(word)
    return out


def main():
    words = set()
    for path in sys.argv[1:]:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                for tok in line.split():
                    tok = "".join(c for c in tok.lower() if c.isalpha() or c == "'")
                    if tok:
                        words.add(tok)
                        for suf in SUFFIXES:
                            words.add(tok + suf)
    words.update(pseudo_words(2000))
    for w in sorted(words):
        print(f"{w}\t{stem(w)}")


if __name__ == "__main__":
    main()
