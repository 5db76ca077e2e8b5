#!/usr/bin/env python3
"""Builds the coverage-filter fixture: 20 tables whose cell-to-sentence
matches are labeled by hand in a review file.

Each TABLES row gives the table shape, how many body cells the labels
cover, and the decision worked out by hand from the rule "exclude when 30%
or more of the body cells are uncovered". Covered cells are the first ones
in row-major order. Tables marked `reject` also get a rejected label on an
uncovered cell, which must not count.

The document "filter-text" has no digits, so automatic matching finds
nothing there. The last two tables use "filter-numbers", whose sentences
state some of their values; their expected coverage is worked out below.

Run from this directory:  python3 make_fixture.py
"""

import json

# id, rows, cols, covered, reject, question, expected
TABLES = [
    ("f01", 2, 5, 7, False, True, "excluded"),   # 3/10 uncovered: exactly 30%
    ("f02", 2, 5, 8, False, True, "retained"),   # 2/10
    ("f03", 4, 5, 14, True, True, "excluded"),   # 6/20: exactly 30%
    ("f04", 4, 5, 15, False, False, "retained"), # 5/20
    ("f05", 3, 3, 7, False, True, "retained"),   # 2/9 = 22.2%
    ("f06", 3, 3, 6, True, True, "excluded"),    # 3/9 = 33.3%
    ("f07", 1, 1, 0, False, True, "excluded"),   # 1/1
    ("f08", 1, 1, 1, False, True, "retained"),   # 0/1
    ("f09", 6, 5, 21, False, True, "excluded"),  # 9/30: exactly 30%
    ("f10", 6, 5, 22, True, False, "retained"),  # 8/30 = 26.7%
    ("f11", 7, 10, 49, False, True, "excluded"), # 21/70: exactly 30%
    ("f12", 7, 10, 50, False, True, "retained"), # 20/70 = 28.6%
    ("f13", 3, 1, 2, False, True, "excluded"),   # 1/3 = 33.3%
    ("f14", 3, 1, 3, False, True, "retained"),   # 0/3
    ("f15", 2, 2, 3, True, True, "retained"),    # 1/4 = 25%
    ("f16", 2, 2, 2, False, True, "excluded"),   # 2/4 = 50%
    ("f17", 5, 4, 20, False, False, "retained"), # 0/20
    ("f18", 5, 4, 0, True, True, "excluded"),    # 20/20
]

TEXT_SENTENCES = [
    "The committee reviewed the quarterly figures.",
    "Revenue grew across every region.",
    "Costs were broadly in line with the plan.",
    "The outlook remains unchanged.",
    "Headcount grew modestly.",
]

# f19 has values 10, 20, 30, 40; the sentences state 10, 20 and 30, and the
# review rejects the match for 30: covered 2 of 4, 50% uncovered, excluded.
# f20 has values 11, 21, 31, 41; the sentences state 11, 21 and 31: covered
# 3 of 4, 25% uncovered, retained.
NUMBER_SENTENCES = [
    "Sales reached 10 units in the north.",
    "Returns came to 20 units.",
    "Costs were 30 units.",
    "Orders were 11 units in the south.",
    "Refunds came to 21 units.",
    "Fees were 31 units.",
]
AUTO = [
    ("f19", ["10", "20", "30", "40"], ["R2C1"], True, "excluded"),
    ("f20", ["11", "21", "31", "41"], [], True, "retained"),
]


def table_html(rows, cols, values):
    head = "<tr><th>Item</th>" + "".join(f"<th>C{c + 1}</th>" for c in range(cols)) + "</tr>"
    body = ""
    for r in range(rows):
        cells = "".join(f"<td>{values[r * cols + c]}</td>" for c in range(cols))
        body += f"<tr><th>Row {r + 1}</th>{cells}</tr>"
    return f"<table><thead>{head}</thead><tbody>{body}</tbody></table>"


def label(r, c):
    return f"R{r + 1}C{c + 1}"


def main():
    tables, reviews, expected = [], [], {"retained": [], "excluded": []}
    for tid, rows, cols, covered, reject, question, decision in TABLES:
        values = [str(100 + i) for i in range(rows * cols)]
        record = {"id": tid, "doc_id": "filter-text", "table_html": table_html(rows, cols, values)}
        if question:
            record["question"] = f"What are the values in table {tid}?"
        tables.append(record)
        for i in range(covered):
            r, c = divmod(i, cols)
            reviews.append({"match_id": f"{tid}/{label(r, c)}", "status": "confirmed", "sentence_ids": [i % len(TEXT_SENTENCES)]})
        if reject and covered < rows * cols:
            r, c = divmod(covered, cols)
            reviews.append({"match_id": f"{tid}/{label(r, c)}", "status": "rejected", "sentence_ids": [0]})
        expected[decision].append(tid)
    for tid, values, rejects, question, decision in AUTO:
        record = {"id": tid, "doc_id": "filter-numbers", "table_html": table_html(2, 2, values)}
        if question:
            record["question"] = f"What are the values in table {tid}?"
        tables.append(record)
        for cell in rejects:
            reviews.append({"match_id": f"{tid}/{cell}", "status": "rejected"})
        expected[decision].append(tid)
    assert len(tables) == 20

    with open("docs.jsonl", "w") as f:
        f.write(json.dumps({"doc_id": "filter-text", "sentences": TEXT_SENTENCES}) + "\n")
        f.write(json.dumps({"doc_id": "filter-numbers", "sentences": NUMBER_SENTENCES}) + "\n")
    with open("tables.jsonl", "w") as f:
        for t in tables:
            f.write(json.dumps(t) + "\n")
    with open("review.jsonl", "w") as f:
        for r in reviews:
            f.write(json.dumps(r) + "\n")
    with open("expected.json", "w") as f:
        json.dump(expected, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
