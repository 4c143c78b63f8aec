"""Reference vocabulary induction for the tokenizer golden test.

Reads the clean_text/clean_entity token lists of textprep_golden.jsonl and
prints the induced vocabulary, one token per line.

usage: bpe_reference.py textprep_golden.jsonl target_size min_freq > vocab_golden.txt
"""
import json
import sys
from collections import Counter

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"]


def pieces_of(word):
    return [c if i == 0 else "##" + c for i, c in enumerate(word)]


def train(word_lists, target, min_freq):
    freq = Counter(w for words in word_lists for w in words if w)
    words = {w: pieces_of(w) for w in freq}
    char_freq = Counter()
    for w, f in freq.items():
        for p in words[w]:
            char_freq[p] += f
    vocab = sorted(p for p, f in char_freq.items() if f >= min_freq)
    known = set(vocab)
    while len(SPECIALS) + len(vocab) < target:
        pairs = Counter()
        for w, syms in words.items():
            for a, b in zip(syms, syms[1:]):
                if a in known and b in known:
                    pairs[(a, b)] += freq[w]
        if not pairs:
            break
        best = min(pairs, key=lambda ab: (-pairs[ab], ab))
        if pairs[best] < min_freq:
            break
        a, b = best
        merged = a + b[2:]
        known.add(merged)
        if merged not in vocab:
            vocab.append(merged)
        for w, syms in words.items():
            out, i = [], 0
            while i < len(syms):
                if i + 1 < len(syms) and syms[i] == a and syms[i + 1] == b:
                    out.append(merged)
                    i += 2
                else:
                    out.append(syms[i])
                    i += 1
            words[w] = out
    return SPECIALS + vocab


def main():
    path, target, min_freq = sys.argv[1], int(sys.argv[2]), int(sys.argv[3])
    lists = []
    for line in open(path, encoding="utf-8"):
        r = json.loads(line)
        lists.append(r["clean_text"])
        lists.append(r["clean_entity"])
    for t in train(lists, target, min_freq):
        print(t)


if __name__ == "__main__":
    main()
