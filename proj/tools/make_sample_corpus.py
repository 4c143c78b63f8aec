#!/usr/bin/env python3
"""Writes data/sample/corpus.jsonl: a 120-record bilingual toy corpus.

Statement templates are shared by every category, so only the entity
identifies the label.
"""
import json
import random
import sys
import unicodedata

ENTITIES = {
    "Medicine/Chemical Name": ["প্যারাসিটামল", "নাপা", "এমোক্সিসিলিন", "মেটফরমিন", "ওমিপ্রাজল",
                               "সিপ্রোফ্লক্সাসিন", "ডাইক্লোফেনাক", "Paracetamol", "Ibuprofen", "Aspirin"],
    "Common Medical Terms": ["রক্তচাপ", "টিকা", "ইনজেকশন", "প্রেসক্রিপশন", "অস্ত্রোপচার", "ব্যান্ডেজ",
                             "স্যালাইন", "Biopsy", "X-ray"],
    "Disease": ["ডায়াবেটিস", "ক্যান্সার", "যক্ষ্মা", "ডেঙ্গু", "ম্যালেরিয়া", "টাইফয়েড", "নিউমোনিয়া",
                "Asthma", "Hepatitis"],
    "Organ": ["হৃদপিণ্ড", "ফুসফুস", "কিডনি", "যকৃত", "মস্তিষ্ক", "পাকস্থলী", "Liver", "Kidney"],
    "Pharmacological Class": ["অ্যান্টিবায়োটিক", "অ্যান্টাসিড", "ব্যথানাশক", "বিটা ব্লকার", "Analgesic",
                              "Antihistamine"],
    "Hormone": ["ইনসুলিন", "থাইরক্সিন", "ইস্ট্রোজেন", "টেস্টোস্টেরন", "কর্টিসল", "অ্যাড্রেনালিন", "Insulin",
                "Oxytocin"],
}
COUNTS = [30, 22, 20, 18, 16, 14]
TEMPLATES = [
    "ডাক্তার রোগীকে {e} সম্পর্কে বিস্তারিত পরামর্শ দিলেন।",
    "{e} নিয়ে নতুন একটি গবেষণা প্রকাশিত হয়েছে।",
    "হাসপাতালের রিপোর্টে {e} বিষয়ে তথ্য পাওয়া গেছে।",
    "স্বাস্থ্য বিশেষজ্ঞরা {e} সম্পর্কে সচেতন থাকতে বলেছেন।",
    "মেডিকেল কলেজের ক্লাসে আজ {e} পড়ানো হলো।",
    "পত্রিকায় {e} নিয়ে একটি প্রতিবেদন ছাপা হয়েছে - ৫০% পাঠক এটি পড়েছেন।",
    "চিকিৎসকের নোটে #{e} শব্দটি লেখা ছিল।",
    "গ্রামের স্বাস্থ্যকর্মী {e} বিষয়ে প্রশ্নের উত্তর দিলেন।",
    "রোগী {e} সম্পর্কে জানতে চাইলেন।",
    "The doctor explained {e} to the patient in detail.",
    "A new study about {e} was published this year ($5 per copy).",
    "Nurses discussed {e} during the morning round.",
]


def nfc(s):
    return unicodedata.normalize("NFC", s)


def main(path):
    rng = random.Random(2024)
    rows = []
    for (label, ents), n in zip(ENTITIES.items(), COUNTS):
        for k in range(n):
            ent = ents[k % len(ents)]
            rows.append((label, ent, rng.choice(TEMPLATES)))
    rng.shuffle(rows)
    with open(path, "w", encoding="utf-8") as f:
        for i, (label, ent, tpl) in enumerate(rows, 1):
            rec = {"id": f"s{i:03d}", "text": nfc(tpl.format(e=ent)), "entity": nfc(ent), "label": label}
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/sample/corpus.jsonl")
