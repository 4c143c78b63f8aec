"""Writes the 20 textprep input records used by the golden test."""
import json
import sys

RECORDS = [
    ("t01", "রোগীকে প্যারাসিটামল ৫০০ মি.গ্রা. দেওয়া হয়েছে।", "প্যারাসিটামল", "Medicine/Chemical Name"),
    ("t02", "ডায়াবেটিস-এর রোগীদের জন্য ইনসুলিন প্রয়োজন।", "ইনসুলিন", "Hormone"),
    ("t03", "কিডনিগুলোর  কার্যক্ষমতা   কমে গেছে!!", "কিডনিগুলোর", "Organ"),
    ("t04", "এই রোগের নাম #ম্যালেরিয়া এবং এটি মশার মাধ্যমে ছড়ায়।", "ম্যালেরিয়া", "Disease"),
    ("t05", "অ্যান্টিবায়োটিকগুলো (antibiotics) সঠিক মাত্রায় খেতে হবে।", "অ্যান্টিবায়োটিকগুলো", "Pharmacological Class"),
    ("t06", "The patient's liver (যকৃৎ) was damaged!", "যকৃৎ", "Organ"),
    ("t07", "ডাক্তাররা বলেছেন “জ্বর” হলে বিশ্রাম নিতে হবে।", "জ্বর", "Common Medical Terms"),
    ("t08", "থাইরক্সিন হরমোনের মাত্রা ৮০% বেড়েছে…", "থাইরক্সিন", "Hormone"),
    ("t09", "তার হৃদপিণ্ডে সমস্যা—চিকিৎসা চলছে।", "হৃদপিণ্ডে", "Organ"),
    ("t10", "মেটফরমিন   ও   গ্লিবেনক্লামাইড একসাথে দেওয়া যাবে না।", "মেটফরমিন", "Medicine/Chemical Name"),
    ("t11", "হাসপাতালে ভর্তি রোগীরা ডেঙ্গুতে আক্রান্ত।", "ডেঙ্গুতে", "Disease"),
    ("t12", "ব্যথানাশক ওষুধটি দিনে দুইবার খাবেন।", "ব্যথানাশক", "Pharmacological Class"),
    ("t13", "রক্তচাপ $১২০/৮০ স্বাভাবিক।", "রক্তচাপ", "Common Medical Terms"),
    ("t14", "ফুসফুসের সংক্রমণ--নিউমোনিয়া।", "নিউমোনিয়া", "Disease"),
    ("t15", "ইস্ট্র\u09c7\u09beজেন ও প্রোজেস্টেরন দুটি হরমোন।", "ইস্ট্রোজেন", "Hormone"),
    ("t16", "আমি আর এখন এই ওষুধটার কথা জানি।", "ওষুধটার", "Medicine/Chemical Name"),
    ("t17", "স্ট্যাটিন-জাতীয়\tওষুধ কোলেস্টেরল কমায়।", "স্ট্যাটিন", "Pharmacological Class"),
    ("t18", "Aspirin 75mg @ night; রাতে এসপিরিন।", "এসপিরিন", "Medicine/Chemical Name"),
    ("t19", "\u09dfকৃতের প্রদাহকে হেপাটাইটিস বলে।", "হেপাটাইটিস", "Disease"),
    ("t20", "পাকস্থলীতে য়থেষ্ট এসিড তৈরি হয়।", "পাকস্থলীতে", "Organ"),
]


def main() -> None:
    out = open(sys.argv[1], "w", encoding="utf-8") if len(sys.argv) > 1 else sys.stdout
    for rid, text, entity, label in RECORDS:
        out.write(json.dumps({"id": rid, "text": text, "entity": entity, "label": label}, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
