#!/usr/bin/env python3
# Copyright 2026 The BRD Authors
# SPDX-License-Identifier: Apache-2.0
"""Regenerates data/fixtures/. Output is deterministic; rerun after edits.

corpus.jsonl   domain corpus: invented people, places and organizations
general.jsonl  everyday prose with almost no named entities
tasks/         small multiple-choice sets used by `brd demo`
"""

import json
import pathlib
import random

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data" / "fixtures"

PEOPLE = ["Orla Venn", "Tomas Quell", "Mirela Dask", "Ivo Brandt", "Sunniva Holt", "Kasimir Lode",
          "Anouk Riel", "Bertil Sand", "Ysolde Marr", "Emrik Thale", "Livia Crane", "Oskar Fenn"]
PLACES = ["Varnholm", "Lake Eskar", "Port Merrow", "Calder Ridge", "Tessaly", "the Ruun Valley",
          "Hallowmere", "Kestrel Bay", "Old Dunmark", "Siltgate"]
ORGS = ["Quillon Works", "the Merrow Guild", "Ashfield Labs", "Northvane Press", "the Eskar Council",
        "Coldwater Rail", "Brightmoor Bank", "the Tessaly Archive"]
YEARS = ["1871", "1902", "1938", "1954", "1966", "1989", "2004", "2017"]

DOMAIN_TEMPLATES = [
    "{p} founded {o} in {pl} in {y}.",
    "{p} moved to {pl} after the harbor closed.",
    "The council in {pl} hired {p} to survey the coast.",
    "{o} opened a second office in {pl}.",
    "{p} and {p2} signed the charter of {o}.",
    "Records kept by {o} mention {p} as a founding member.",
    "In {y}, {p} published a map of {pl}.",
    "{p} later served as treasurer of {o}.",
    "A storm in {y} flooded the lower streets of {pl}.",
    "{p2} wrote that {p} rarely left {pl}.",
    "The bridge at {pl} was rebuilt by {o}.",
    "{o} still keeps the letters of {p}.",
]

GENERAL_SENTENCES = [
    "the kettle was still warm when we came back inside.",
    "my neighbor waters her tomatoes every evening.",
    "a cold wind pushed the leaves across the yard.",
    "we ate soup and bread by the window.",
    "the bus was late again this morning.",
    "he folded the laundry while the radio played.",
    "there is a small crack in the kitchen tile.",
    "the children built a fort out of blankets.",
    "she keeps her keys in a bowl near the door.",
    "rain tapped on the roof all night long.",
    "the dog barked at every passing bicycle.",
    "we planted beans along the back fence.",
    "the coffee tasted bitter but it woke me up.",
    "an old clock ticked loudly in the hallway.",
    "they painted the fence a pale shade of green.",
    "the market sold apples, pears and fresh eggs.",
    "a quiet afternoon is good for reading.",
    "the cat slept on the warm stones of the path.",
    "he forgot his umbrella and got soaked.",
    "the soup needed a little more salt.",
]

SENTIMENT_POS = ["a warm and delightful story", "the acting was wonderful", "a clever, funny film",
                 "i loved every minute of it", "a bright and hopeful ending", "truly great music"]
SENTIMENT_NEG = ["a dull and tiresome plot", "the acting was awful", "a slow, boring film",
                 "i hated every minute of it", "a bleak and pointless ending", "truly terrible music"]


def cap(s):
    return s[0].upper() + s[1:]


def domain_sentence(rng):
    t = rng.choice(DOMAIN_TEMPLATES)
    p, p2 = rng.sample(PEOPLE, 2)
    return cap(t.format(p=p, p2=p2, pl=rng.choice(PLACES), o=rng.choice(ORGS), y=rng.choice(YEARS)))


def entities_in(sentence):
    found = [e for e in PEOPLE + ORGS + PLACES if e in sentence or cap(e) in sentence]
    return [cap(e) if cap(e) in sentence else e for e in found]


def write_jsonl(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


def main():
    rng = random.Random(20261019)

    corpus = []
    for i in range(60):
        sents = [domain_sentence(rng) for _ in range(rng.randint(3, 5))]
        corpus.append({"id": f"dom-{i:03d}", "text": " ".join(sents)})
    write_jsonl(ROOT / "corpus.jsonl", corpus)

    general = []
    for i in range(60):
        sents = [cap(s) for s in rng.sample(GENERAL_SENTENCES, rng.randint(3, 5))]
        general.append({"id": f"gen-{i:03d}", "text": " ".join(sents)})
    write_jsonl(ROOT / "general.jsonl", general)

    # entity task: which span is the named entity of this (held-out) sentence?
    entity = []
    distractors = ["harbor", "charter", "letters", "streets", "office", "coast", "bridge", "map"]
    while len(entity) < 60:
        s = domain_sentence(rng)
        ents = [e for e in entities_in(s) if not e.startswith(("the ", "The "))]
        if not ents:
            continue
        gold = rng.choice(ents)
        wrong = rng.choice([d for d in distractors if d not in gold.lower()])
        cands = [gold, wrong]
        rng.shuffle(cands)
        entity.append({"id": f"entity-{len(entity):03d}",
                       "prompt": s + ' <sep> In this sentence, "',
                       "candidates": cands, "gold": gold})
    write_jsonl(ROOT / "tasks" / "entity.jsonl", entity)

    sst2 = []
    for i in range(40):
        positive = i % 2 == 0
        text = rng.choice(SENTIMENT_POS if positive else SENTIMENT_NEG)
        sst2.append({"id": f"sst2-{i:03d}", "fields": {"sentence": text},
                     "candidates": ["positive", "negative"], "gold": "positive" if positive else "negative"})
    write_jsonl(ROOT / "tasks" / "sst2.jsonl", sst2)

    boolq = []
    for i in range(40):
        s = domain_sentence(rng)
        ents = entities_in(s)
        other = rng.choice([e for e in PEOPLE + PLACES if e not in ents])
        asked, gold = (ents[0], "Yes") if i % 2 == 0 else (other, "No")
        boolq.append({"id": f"boolq-{i:03d}", "fields": {"passage": s, "question": f"is {asked} mentioned?"},
                      "candidates": ["Yes", "No"], "gold": gold})
    write_jsonl(ROOT / "tasks" / "boolq.jsonl", boolq)

    xnli = []
    for i in range(30):
        s = domain_sentence(rng)
        label = ["Yes", "No", "Maybe"][i % 3]
        ents = entities_in(s)
        if label == "Yes":
            hyp = f"{ents[0]} is mentioned"
        elif label == "No":
            hyp = f"{rng.choice([p for p in PEOPLE if p not in s])} is mentioned"
        else:
            hyp = f"{ents[0]} was happy"
        xnli.append({"id": f"xnli-{i:03d}", "fields": {"premise": s, "hypothesis": hyp},
                     "candidates": ["Yes", "No", "Maybe"], "gold": label})
    write_jsonl(ROOT / "tasks" / "xnli.jsonl", xnli)


if __name__ == "__main__":
    main()
