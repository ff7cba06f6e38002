"""Porter stemmer (1980), steps 1a-5b as published.

Uses the original rule table: step 2 maps ABLI -> ABLE (not the later
BLI -> BLE revision) and has no LOGI -> LOG rule; step 1c is the original
(*v*) Y -> I. Words of length 1-2 are returned unchanged.
"""

from __future__ import annotations


class _Buffer:
    """Word under edit: b[0..k] is the live region, j marks a rule's stem end."""

    def __init__(self, word: str):
        self.b = list(word)
        self.k = len(word) - 1
        self.j = 0

    def cons(self, i: int) -> bool:
        ch = self.b[i]
        if ch in "aeiou":
            return False
        if ch == "y":
            return True if i == 0 else not self.cons(i - 1)
        return True

    def m(self) -> int:
        """Number of VC sequences in [C](VC)^m[V] over b[0..j]."""
        n = 0
        i = 0
        while True:
            if i > self.j:
                return n
            if not self.cons(i):
                break
            i += 1
        i += 1
        while True:
            while True:
                if i > self.j:
                    return n
                if self.cons(i):
                    break
                i += 1
            i += 1
            n += 1
            while True:
                if i > self.j:
                    return n
                if not self.cons(i):
                    break
                i += 1
            i += 1

    def vowel_in_stem(self) -> bool:
        return any(not self.cons(i) for i in range(self.j + 1))

    def doublec(self, j: int) -> bool:
        return j >= 1 and self.b[j] == self.b[j - 1] and self.cons(j)

    def cvc(self, i: int) -> bool:
        """consonant-vowel-consonant ending where the final consonant is not
        w, x, or y; signals that a rule like (m=1 and *o) E applies."""
        if i < 2 or not self.cons(i) or self.cons(i - 1) or not self.cons(i - 2):
            return False
        return self.b[i] not in "wxy"

    def ends(self, s: str) -> bool:
        length = len(s)
        if length > self.k + 1 or "".join(self.b[self.k - length + 1 : self.k + 1]) != s:
            return False
        self.j = self.k - length
        return True

    def setto(self, s: str):
        self.b[self.j + 1 : self.k + 1] = list(s)
        self.k = self.j + len(s)

    def r(self, s: str):
        if self.m() > 0:
            self.setto(s)


def _step1ab(w: _Buffer):
    if w.b[w.k] == "s":
        if w.ends("sses"):
            w.k -= 2
        elif w.ends("ies"):
            w.setto("i")
        elif w.b[w.k - 1] != "s":
            w.k -= 1
    if w.ends("eed"):
        if w.m() > 0:
            w.k -= 1
    elif (w.ends("ed") or w.ends("ing")) and w.vowel_in_stem():
        w.k = w.j
        if w.ends("at"):
            w.setto("ate")
        elif w.ends("bl"):
            w.setto("ble")
        elif w.ends("iz"):
            w.setto("ize")
        elif w.doublec(w.k):
            if w.b[w.k] not in "lsz":
                w.k -= 1
        else:
            w.j = w.k
            if w.m() == 1 and w.cvc(w.k):
                w.setto("e")


def _step1c(w: _Buffer):
    if w.ends("y") and w.vowel_in_stem():
        w.b[w.k] = "i"


_STEP2 = (
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
)

_STEP3 = (
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
)

_STEP4 = (
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
    "ment", "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
)


def _step2(w: _Buffer):
    for suffix, repl in _STEP2:
        if w.ends(suffix):
            w.r(repl)
            return


def _step3(w: _Buffer):
    for suffix, repl in _STEP3:
        if w.ends(suffix):
            w.r(repl)
            return


def _step4(w: _Buffer):
    for suffix in _STEP4:
        if w.ends(suffix):
            if suffix == "ion" and w.b[w.j] not in "st":
                continue
            if w.m() > 1:
                w.k = w.j
            return


def _step5(w: _Buffer):
    w.j = w.k
    if w.b[w.k] == "e":
        a = w.m()
        if a > 1 or (a == 1 and not w.cvc(w.k - 1)):
            w.k -= 1
    if w.b[w.k] == "l" and w.doublec(w.k) and w.m() > 1:
        w.k -= 1


def porter_stem(word: str) -> str:
    """Stem one lowercase token."""
    if len(word) <= 2:
        return word
    w = _Buffer(word)
    _step1ab(w)
    _step1c(w)
    _step2(w)
    _step3(w)
    _step4(w)
    _step5(w)
    return "".join(w.b[: w.k + 1])
