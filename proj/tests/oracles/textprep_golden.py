"""Reference preprocessing for the textprep golden file.

Independent of the C++ code: unicodedata for NFC, re for the character
classes, plain dict lookups for stopwords and suffix rules.

usage: textprep_golden.py records.jsonl stopwords.txt suffixes.tsv > golden.jsonl
"""
import json
import re
import sys
import unicodedata

LABELS = ["Medicine/Chemical Name", "Common Medical Terms", "Disease", "Organ", "Pharmacological Class", "Hormone"]

STRIP = set(chr(c) for c in range(0x21, 0x7F) if not chr(c).isalnum())
STRIP |= set("।॥‘’“”–—…·•")
STRIP_RE = re.compile("[" + re.escape("".join(sorted(STRIP))) + "]")
SPACE_RE = re.compile(r"\s+")
MIN_STEM = 2


def nfc(s):
    return unicodedata.normalize("NFC", s)


def clean(raw):
    cur = nfc(raw)
    while True:
        nxt = nfc(SPACE_RE.sub(" ", STRIP_RE.sub("", cur)).strip())
        if nxt == cur:
            return cur
        cur = nxt


def load_stopwords(path):
    words = set()
    for line in open(path, encoding="utf-8"):
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(nfc(line))
    return words


def load_suffixes(path):
    rules = []
    for line in open(path, encoding="utf-8"):
        line = line.rstrip("\r\n")
        if not line or line.startswith("#"):
            continue
        suffix, repl = line.split("\t")
        rules.append((nfc(suffix), nfc(repl)))
    rules.sort(key=lambda r: (-len(r[0]), r[0].encode("utf-8")))
    return rules


def stem(word, rules):
    for suffix, repl in rules:
        if word.endswith(suffix) and len(word) - len(suffix) >= MIN_STEM:
            return nfc(word[: -len(suffix)] + repl)
    return word


def tokens(raw, stop, rules):
    return [stem(t, rules) for t in clean(raw).split(" ") if t and t not in stop]


def main():
    records, stop_path, suffix_path = sys.argv[1:4]
    stop = load_stopwords(stop_path)
    rules = load_suffixes(suffix_path)
    for line in open(records, encoding="utf-8"):
        r = json.loads(line)
        out = {
            "id": r["id"],
            "clean_text": tokens(r["text"], stop, rules),
            "clean_entity": tokens(r["entity"], stop, rules),
            "label_id": LABELS.index(r["label"]),
        }
        print(json.dumps(out, ensure_ascii=False))


if __name__ == "__main__":
    main()
