"""Tweet text normalization: the nine-step cleaner for individual tweets.

Steps, in order: lowercase; strip tweet entities (urls, emojis, emails,
phone numbers, @names); segment hashtags against a wordlist; join runs of
spaced single characters; collapse repeated suffixes; expand slang from a
dictionary; strip special characters and brackets; normalize whitespace;
terminate with a period.
"""
from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources
from pathlib import Path

_URL_RE = re.compile(r"(?:https?://|www\.)\S+")
_EMAIL_RE = re.compile(r"\S+@\S+\.\S+")
_PHONE_RE = re.compile(r"\+?\d{3}[-.\s]?\d{3,4}[-.\s]?\d{4}\b")
_MENTION_RE = re.compile(r"@\w+")
_HASHTAG_RE = re.compile(r"#(\w+)")
_SPECIAL_RE = re.compile(r"[^a-z0-9'\s.,!?\-]")
_WS_RE = re.compile(r"\s+")


def load_wordlist(path=None) -> frozenset[str]:
    if path is None:
        text = resources.files("tweet2traffic").joinpath("data/wordlist.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def load_slang(path=None) -> dict[str, str]:
    if path is None:
        text = resources.files("tweet2traffic").joinpath("data/slang.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    out = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition("\t")
        out[key.strip()] = value.strip()
    return out


@lru_cache(maxsize=1)
def _default_wordlist():
    return load_wordlist()


@lru_cache(maxsize=1)
def _default_slang():
    return load_slang()


def _strip_entities(text: str) -> str:
    text = _URL_RE.sub(" ", text)
    text = _EMAIL_RE.sub(" ", text)
    text = _PHONE_RE.sub(" ", text)
    text = _MENTION_RE.sub(" ", text)
    # emojis and other symbols live above the basic Latin/punctuation planes
    return "".join(c for c in text if ord(c) < 0x2500)


def segment_hashtag(body: str, wordlist: frozenset[str]) -> str:
    """Greedy longest-prefix segmentation; unmatched chars stay glued together."""
    tokens = []
    i = 0
    pending = ""
    n = len(body)
    while i < n:
        best = None
        for j in range(min(n, i + 24), i, -1):
            if body[i:j] in wordlist:
                best = body[i:j]
                break
        if best is None:
            pending += body[i]
            i += 1
        else:
            if pending:
                tokens.append(pending)
                pending = ""
            tokens.append(best)
            i += len(best)
    if pending:
        tokens.append(pending)
    return " ".join(tokens)


def _join_spaced_singles(text: str) -> str:
    """Concatenate runs of more than 3 single-character tokens."""
    tokens = text.split(" ")
    out = []
    run = []
    for tok in tokens + [""]:
        if len(tok) == 1 and tok.isalnum():
            run.append(tok)
        else:
            if len(run) > 3:
                out.append("".join(run))
            else:
                out.extend(run)
            run = []
            if tok:
                out.append(tok)
    return " ".join(out)


def _collapse_repeats(token: str) -> str:
    # character runs of 3+ collapse to a single character (soooo -> so)
    token = re.sub(r"(.)\1{2,}", r"\1", token)
    # repeated trailing blocks of 2-4 chars reduce until stable (lololol -> lol)
    changed = True
    while changed:
        changed = False
        for size in (4, 3, 2):
            while len(token) >= 2 * size and token[-size:] == token[-2 * size:-size]:
                token = token[:-size]
                changed = True
    return token


def _expand_slang(text: str, slang: dict[str, str]) -> str:
    return " ".join(slang.get(tok, tok) for tok in text.split(" "))


def _clean_pass(raw: str, slang, wordlist) -> str:
    text = raw.lower()                                                     # 1
    text = _strip_entities(text)                                           # 2
    text = _HASHTAG_RE.sub(lambda m: " " + segment_hashtag(m.group(1), wordlist) + " ", text)  # 3
    text = _WS_RE.sub(" ", text).strip()
    text = _join_spaced_singles(text)                                      # 4
    text = " ".join(_collapse_repeats(t) for t in text.split(" "))         # 5
    text = _expand_slang(text, slang)                                      # 6
    text = _SPECIAL_RE.sub(" ", text)                                      # 7
    text = _WS_RE.sub(" ", text).strip()                                   # 8
    text = text.rstrip(" ,-")                                              # 9
    if not text.endswith((".", "!", "?")):
        text += "."
    return text


def clean_text(raw: str, slang: dict[str, str] | None = None,
               wordlist: frozenset[str] | None = None) -> str:
    if slang is None:
        slang = _default_slang()
    if wordlist is None:
        wordlist = _default_wordlist()
    # stripping specials (step 7) can expose new single-char or repeat runs,
    # so the pass repeats until stable; idempotence is part of the contract
    text = _clean_pass(raw, slang, wordlist)
    for _ in range(4):
        again = _clean_pass(text, slang, wordlist)
        if again == text:
            break
        text = again
    return text
