#!/usr/bin/env python3
"""Builds the retrieval fixture: a 200-sentence document, QA triples, a
rewrite transcript and the golden ranking.

The golden ranking comes from a plain brute-force cosine scan written here
from scratch. Summation uses explicit loops in index order, never math.fsum
or sum() (which compensates on recent Pythons).

Run from this directory:  python3 make_fixture.py
"""

import hashlib
import json
import math
import random

SEED = 20240501
DIM = 4096
K = 30
RECALL_KS = (10, 20, 30)
DOC_ID = "retrieval-doc"

COMPANIES = ["Acme", "Borealis", "Cobalt", "Dunmore", "Everly"]
METRICS = ["revenue", "net income", "operating expenses", "research spending", "headcount"]
YEARS = [2019, 2020, 2021, 2022, 2023]

RAW_TEMPLATES = [
    "In {year}, {company} reported {metric} of {value}.",
    "{company}'s {metric} reached {value} in {year}.",
    "For fiscal {year}, {metric} at {company} came to {value}.",
    "{company} recorded {value} in {metric} during {year}.",
]

DISTRACTORS = [
    "{company} expects {metric} growth to slow next year.",
    "Analysts compared the {metric} of {company} with the industry average.",
    "The {metric} guidance issued by {company} was withdrawn.",
    "{company} changed how it defines {metric} in its filings.",
    "A footnote explains the restated {metric} figures of {company}.",
]

FILLER = [
    "The board met {n} times during the year.",
    "Management believes the outlook for the sector remains stable.",
    "The audit committee reviewed {n} internal control reports.",
    "Shareholders approved the proposed amendments at the annual meeting.",
    "The company leases office space in {n} cities.",
    "Risk factors are described in the section that follows.",
    "Forward-looking statements involve known and unknown risks.",
    "The dividend policy was unchanged from the prior period.",
    "Employees completed {n} hours of compliance training.",
    "Litigation reserves were evaluated at each quarter end.",
    "The chief financial officer retired after {n} years of service.",
    "Tax positions are reviewed by external advisers.",
    "Supply chain disruptions eased in the second half.",
    "The credit facility matures in {n} years.",
    "Segment reporting follows the management approach.",
]


def fnv1a(data):
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def normalize(text):
    return " ".join(text.split())


def l2(v):
    total = 0.0
    for x in v:
        total += x * x
    return math.sqrt(total)


def embed(text):
    v = [0.0] * DIM
    s = normalize(text).lower()
    if not s:
        return v
    chars = list(" " + s + " ")
    for i in range(len(chars) - 2):
        gram = "".join(chars[i : i + 3]).encode("utf-8")
        v[fnv1a(gram) % DIM] += 1.0
    norm = l2(v)
    v = [x / norm for x in v]
    # Vectors within 1e-9 of unit norm are left alone.
    n2 = l2(v)
    if n2 > 0.0 and abs(n2 - 1.0) > 1e-9:
        v = [x / n2 for x in v]
    return v


def cosine(a, b):
    na, nb = l2(a), l2(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    if a == b:
        return 1.0
    dot = 0.0
    for x, y in zip(a, b):
        dot += x * y
    return max(-1.0, min(1.0, dot / (na * nb)))


def canonical(value):
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def fingerprint(kind, request):
    return hashlib.sha256(canonical({"kind": kind, "request": request}).encode("utf-8")).hexdigest()


def fmt_value(metric, amount):
    if metric == "headcount":
        return f"{amount:,} employees"
    return f"${amount:,} million"


def build_corpus(rng):
    facts = []
    for company in COMPANIES:
        for metric in METRICS:
            for year in YEARS:
                if metric == "headcount":
                    amount = rng.randrange(800, 20000)
                else:
                    amount = rng.randrange(40, 9000)
                facts.append((company, metric, year, amount))
    sentences = []
    for company, metric, year, amount in facts:
        template = rng.choice(RAW_TEMPLATES)
        value = fmt_value(metric, amount)
        raw = template.format(company=company, metric=metric, year=year, value=value)
        raw = raw[0].upper() + raw[1:]
        rewrite = f"{company} {metric} in {year} was {value}."
        sentences.append({"raw": raw, "rewrite": rewrite, "fact": (company, metric, year, amount)})
    sentences.append(
        {
            "raw": "The company reported that revenue reached $56.2 billion",
            "rewrite": "The company's revenue reached $56.2 billion.",
            "fact": None,
        }
    )
    for _ in range(30):
        while True:
            text = rng.choice(DISTRACTORS).format(company=rng.choice(COMPANIES), metric=rng.choice(METRICS))
            text = text[0].upper() + text[1:]
            if all(s["raw"] != text for s in sentences):
                break
        sentences.append({"raw": text, "rewrite": text, "fact": None})
    while len(sentences) < 200:
        text = rng.choice(FILLER).format(n=rng.randrange(2, 40))
        if any(s["raw"] == text for s in sentences):
            continue
        sentences.append({"raw": text, "rewrite": text, "fact": None})
    rng.shuffle(sentences)
    # About half the sentences have no recorded rewrite, so replay fails for
    # them and retrieval scores their raw text.
    for s in sentences:
        s["rewritten"] = rng.random() < 0.5
    return sentences


QUESTIONS = [
    {
        "id": "r1",
        "question": "How did the revenue and net income of Acme change from 2019 to 2023?",
        "sub_questions": [
            "What was the revenue of Acme in each year from 2019 to 2023?",
            "What was the net income of Acme in each year from 2019 to 2023?",
        ],
        "companies": ["Acme"],
        "metrics": ["revenue", "net income"],
        "years": YEARS,
    },
    {
        "id": "r2",
        "question": "Compare the research spending of Borealis and Cobalt across the years.",
        "sub_questions": [
            "What was the research spending of Borealis in each year?",
            "What was the research spending of Cobalt in each year?",
        ],
        "companies": ["Borealis", "Cobalt"],
        "metrics": ["research spending"],
        "years": YEARS,
    },
    {
        "id": "r3",
        "question": "What were the operating expenses and headcount of Dunmore by year?",
        "sub_questions": [
            "What were the operating expenses of Dunmore in each year?",
            "What was the headcount of Dunmore in each year?",
        ],
        "companies": ["Dunmore"],
        "metrics": ["operating expenses", "headcount"],
        "years": YEARS,
    },
    {
        "id": "r4",
        "question": "Compare the revenue of Everly, Acme and Cobalt in 2022 and 2023.",
        "sub_questions": [
            "What was the revenue of Everly in 2022 and 2023?",
            "What was the revenue of Acme in 2022 and 2023?",
            "What was the revenue of Cobalt in 2022 and 2023?",
        ],
        "companies": ["Everly", "Acme", "Cobalt"],
        "metrics": ["revenue"],
        "years": [2022, 2023],
    },
    {
        # The rewriter returns no outputs here, so retrieval falls back to
        # the original question.
        "id": "r5",
        "question": "What was the headcount of Borealis over the five years?",
        "sub_questions": [],
        "companies": ["Borealis"],
        "metrics": ["headcount"],
        "years": YEARS,
    },
]


def table_html(q, sentences):
    rows = []
    for company in q["companies"]:
        for metric in q["metrics"]:
            rows.append((company, metric))
    cells = {}
    for s in sentences:
        if s["fact"]:
            c, m, y, a = s["fact"]
            cells[(c, m, y)] = fmt_value(m, a)
    years = q["years"]
    head = "<tr><th>Company</th><th>Metric</th>" + "".join(f"<th>{y}</th>" for y in years) + "</tr>"
    body = []
    by_company = {}
    for company, metric in rows:
        by_company.setdefault(company, []).append(metric)
    for company, metrics in by_company.items():
        for i, metric in enumerate(metrics):
            lead = f'<th rowspan="{len(metrics)}">{company}</th>' if i == 0 else ""
            tds = "".join(f"<td>{cells[(company, metric, y)]}</td>" for y in years)
            body.append(f"<tr>{lead}<th>{metric}</th>{tds}</tr>")
    return f"<table><thead>{head}</thead><tbody>{''.join(body)}</tbody></table>"


def merge_round_robin(lists, k):
    seen, out = set(), []
    longest = max(len(l) for l in lists)
    for pos in range(longest):
        for lst in lists:
            if pos < len(lst):
                sid, score = lst[pos]
                if sid not in seen:
                    seen.add(sid)
                    out.append((sid, score))
                    if len(out) == k:
                        return out
    return out


def recall(ranked, relevant, k):
    hits = len(set(ranked[:k]) & set(relevant))
    return hits / len(relevant)


def main():
    rng = random.Random(SEED)
    sentences = build_corpus(rng)
    assert len(sentences) == 200

    with open("docs.jsonl", "w", encoding="utf-8") as f:
        f.write(json.dumps({"doc_id": DOC_ID, "sentences": [s["raw"] for s in sentences]}, ensure_ascii=False) + "\n")

    triples = []
    for q in QUESTIONS:
        relevant = [
            i
            for i, s in enumerate(sentences)
            if s["fact"]
            and s["fact"][0] in q["companies"]
            and s["fact"][1] in q["metrics"]
            and s["fact"][2] in q["years"]
        ]
        triples.append(
            {
                "id": q["id"],
                "doc_id": DOC_ID,
                "question": q["question"],
                "table_html": table_html(q, sentences),
                "relevant_sentence_ids": relevant,
            }
        )
    with open("triples.jsonl", "w", encoding="utf-8") as f:
        for t in triples:
            f.write(json.dumps(t, ensure_ascii=False) + "\n")

    entries = []
    for q in QUESTIONS:
        request = {"mode": "question", "text": normalize(q["question"])}
        entries.append((request, {"outputs": q["sub_questions"]}))
    for s in sentences:
        if not s["rewritten"]:
            continue
        request = {"mode": "sentence", "text": s["raw"]}
        entries.append((request, {"outputs": [s["rewrite"]]}))
    with open("rewrites.jsonl", "w", encoding="utf-8") as f:
        f.write(json.dumps({"meta": {"provider": "hand-written rewrites", "captured_at": ""}}) + "\n")
        for request, response in entries:
            line = {
                "fingerprint": fingerprint("rewrite", request),
                "kind": "rewrite",
                "request": request,
                "response": response,
            }
            f.write(json.dumps(line, ensure_ascii=False) + "\n")

    sentence_vectors = [embed(normalize(s["rewrite"]) if s["rewritten"] else s["raw"]) for s in sentences]
    items = []
    for q, t in zip(QUESTIONS, triples):
        subs = [normalize(x) for x in q["sub_questions"]] or [normalize(q["question"])]
        lists = []
        for sub in subs:
            qv = embed(sub)
            scored = [(i, cosine(qv, v)) for i, v in enumerate(sentence_vectors)]
            scored.sort(key=lambda p: (-p[1], p[0]))
            lists.append(scored)
        merged = merge_round_robin(lists, K)
        ranked = [sid for sid, _ in merged]
        items.append(
            {
                "id": q["id"],
                "sub_questions": subs,
                "degraded": not q["sub_questions"],
                "merged": [{"sentence_id": sid, "score": score} for sid, score in merged],
                "recall": {str(k): recall(ranked, t["relevant_sentence_ids"], k) for k in RECALL_KS},
            }
        )
    mean = {}
    for k in RECALL_KS:
        total = 0.0
        for item in items:
            total += item["recall"][str(k)]
        mean[str(k)] = total / len(items)
    with open("golden.json", "w", encoding="utf-8") as f:
        json.dump({"k": K, "items": items, "mean_recall": mean}, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
