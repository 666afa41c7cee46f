#!/usr/bin/env python3
"""Regenerates the 30-document toy corpus, queries, qrels, embeddings, and
idf table. Deterministic; run from this directory: python3 make_toy.py"""
import json, math, random

rng = random.Random(20260816)

TOPICS = ["insulin", "glucagon", "amyloid", "dopamine", "serotonin"]
ORGANS = ["pancreas", "liver", "brain", "kidney", "heart", "lung"]
VERBS = ["regulates", "inhibits", "activates", "modulates", "binds"]
NOUNS = ["receptor", "pathway", "secretion", "signaling", "expression",
         "metabolism", "transport", "clearance", "synthesis", "uptake"]
FILLER = ["study", "patients", "analysis", "results", "cohort", "trial",
          "mice", "cells", "tissue", "protein", "gene", "levels",
          "baseline", "treatment", "response", "mechanism"]

def sentence(words):
    words = list(words)
    words[0] = words[0].capitalize()
    return " ".join(words) + "."

docs = []
gold = {}  # doc_id -> list of (begin, end) spans of topic sentences
relevant = {t: [] for t in TOPICS}

for i in range(30):
    doc_id = f"D{i:02d}"
    topic = TOPICS[i % len(TOPICS)] if i < 20 else None  # 10 docs off-topic
    title_words = [rng.choice(FILLER), rng.choice(NOUNS), rng.choice(FILLER)]
    if topic and i % 2 == 0:
        title_words.insert(1, topic)
    title = " ".join(title_words)
    sents, topic_sents = [], []
    n_sent = rng.randint(3, 5)
    topic_positions = set(rng.sample(range(n_sent), 2)) if topic else set()
    for s in range(n_sent):
        w = [rng.choice(FILLER), rng.choice(VERBS), rng.choice(NOUNS),
             rng.choice(ORGANS), rng.choice(FILLER)]
        if s in topic_positions:
            w.insert(1, topic)
            w.insert(3, topic)
        text = sentence(w)
        sents.append(text)
        if s in topic_positions:
            topic_sents.append(text)
    abstract = " ".join(sents)
    doc_text = title + " " + abstract
    spans = []
    for t in topic_sents:
        b = doc_text.index(t)
        spans.append((b, b + len(t)))
    docs.append({"id": doc_id, "title": title, "abstract": abstract})
    if topic:
        relevant[topic].append(doc_id)
        gold[doc_id] = spans

with open("corpus.jsonl", "w") as f:
    for d in docs:
        f.write(json.dumps(d) + "\n")

queries, qrels = [], []
for qi, topic in enumerate(TOPICS):
    qid = f"Q{qi}"
    queries.append({"id": qid, "body": f"what does {topic} do in the {rng.choice(ORGANS)}"})
    snips = []
    for doc_id in relevant[topic]:
        for b, e in gold.get(doc_id, []):
            snips.append({"doc_id": doc_id, "begin_char": b, "end_char": e})
    qrels.append({"query_id": qid, "relevant_docs": relevant[topic],
                  "gold_snippets": snips})

with open("queries.jsonl", "w") as f:
    for q in queries:
        f.write(json.dumps(q) + "\n")
with open("qrels.jsonl", "w") as f:
    for q in qrels:
        f.write(json.dumps(q) + "\n")

# Embeddings over the full vocabulary (8-dim), plus an idf table.
def tokenize(text):
    out, cur = [], []
    punct = set('.,?;*!%^&+()[]{}:-"\'/\\|<>=#@~')
    for ch in text:
        if ch in punct or ch.isspace():
            if cur:
                out.append("".join(cur))
                cur = []
        else:
            cur.append(ch.lower())
    if cur:
        out.append("".join(cur))
    return out

vocab, df = set(), {}
for d in docs:
    toks = tokenize(d["title"] + " " + d["abstract"])
    vocab.update(toks)
    for t in set(toks):
        df[t] = df.get(t, 0) + 1
for q in queries:
    vocab.update(tokenize(q["body"]))

with open("embeddings.txt", "w") as f:
    dim = 8
    f.write(f"{len(vocab)} {dim}\n")
    for tok in sorted(vocab):
        vec = [rng.uniform(-1, 1) for _ in range(dim)]
        norm = math.sqrt(sum(v * v for v in vec))
        f.write(tok + " " + " ".join("%.8f" % (v / norm) for v in vec) + "\n")

n_docs = len(docs)
with open("idf.tsv", "w") as f:
    for tok in sorted(vocab):
        d = df.get(tok, 0)
        f.write("%s\t%.10f\n" % (tok, math.log(1 + (n_docs - d + 0.5) / (d + 0.5))))
print(f"{len(docs)} docs, {len(queries)} queries, vocab {len(vocab)}")
