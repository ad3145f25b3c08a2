#!/usr/bin/env python3
"""Generate the 100-record evaluation fixture under data/fixtures/table1.

The scripted backend is planted so that the multi-agent pipeline produces the
confusion matrix (tp=47, fp=5, fn=27, tn=21) and the few-shot baseline
produces (tp=60, fp=22, fn=12, tn=6). Both datasets share ids and queries;
their gold labels differ on two records (74/26 vs 72/28 needed/not_needed).

Every query starts with a "[tNNN]" marker so script rules can key on it.
Output is deterministic; rerun after changing the plan.
"""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "fixtures" / "table1"

GENERIC = "SENTENCE-LEVEL AMBIGUITY CHECK"
DECISION = "AMBIGUITY EVIDENCE"
BASELINE = "FEW-SHOT CLARIFICATION DECISION"

# Query stems by how the agents react to them with the demo knowledge stores.
ENTITY_STEMS = [
    ("what is a schema", "aleatoric"),
    ("how do i edit the schema", "aleatoric"),
    ("which fields does the schema have", "aleatoric"),
    ("copy the schema to another sandbox", "aleatoric"),
    ("who can update the profile", "aleatoric"),
]
PRODUCT_STEMS = [
    ("how do i create a segment", "contextual"),
    ("share the segment with my team", "contextual"),
    ("rename a segment", "contextual"),
]
GENERIC_STEMS = [
    ("fix it", "contextual"),
    ("do the same for that one", "contextual"),
    ("why did it fail yesterday", "contextual"),
    ("dataset ingest when", "syntactic"),
]
QUIET_STEMS = [
    ("list datasets ingested today", "syntactic"),
    ("how do i build a journey campaign", "contextual"),
    ("show the identity graph for one person", "aleatoric"),
    ("how do i add a source connector", "syntactic"),
    ("which metric is in the report", "contextual"),
]

# (gold, detected, decision reply) -> count for the multi-agent run.
PLAN = [
    ("needed", True, "NEEDED", 47),
    ("needed", False, None, 15),
    ("needed", True, "NOT_NEEDED", 12),
    ("not_needed", True, "NEEDED", 5),
    ("not_needed", False, None, 14),
    ("not_needed", True, "NOT_NEEDED", 7),
]


def main() -> None:
    rng = random.Random(20240917)
    slots = []
    for gold, detected, reply, count in PLAN:
        slots += [(gold, detected, reply)] * count
    rng.shuffle(slots)

    records = []
    detectors = ["entity", "product", "generic"]
    d_idx = q_idx = 0
    for i, (gold, detected, reply) in enumerate(slots, start=1):
        rid = f"t{i:03d}"
        if detected:
            source = detectors[d_idx % 3]
            stems = {"entity": ENTITY_STEMS, "product": PRODUCT_STEMS, "generic": GENERIC_STEMS}[source]
            stem, category = stems[(d_idx // 3) % len(stems)]
            d_idx += 1
        else:
            source = None
            stem, category = QUIET_STEMS[q_idx % len(QUIET_STEMS)]
            q_idx += 1
        records.append({"id": rid, "query": f"[{rid}] {stem}", "gold": gold, "category": category,
                        "source": source, "reply": reply})

    # Baseline gold: flip the first two needed zero-detection records to not_needed.
    baseline_gold = {r["id"]: r["gold"] for r in records}
    flipped = [r["id"] for r in records if r["gold"] == "needed" and r["source"] is None][:2]
    for rid in flipped:
        baseline_gold[rid] = "not_needed"

    # Baseline predictions: 60 of 72 needed and 22 of 28 not_needed predicted NEEDED.
    needed_ids = [r["id"] for r in records if baseline_gold[r["id"]] == "needed"]
    not_needed_ids = [r["id"] for r in records if baseline_gold[r["id"]] == "not_needed"]
    assert (len(needed_ids), len(not_needed_ids)) == (72, 28)
    rng.shuffle(needed_ids)
    rng.shuffle(not_needed_ids)
    baseline_needed = set(needed_ids[:60]) | set(not_needed_ids[:22])

    def line(rid, query, gold, category):
        rec = {"id": rid, "query": query, "label": gold, "categories": [category] if gold == "needed" else []}
        return json.dumps(rec)

    with open(OUT / "dataset_multi_agent.jsonl", "w") as f:
        for r in records:
            f.write(line(r["id"], r["query"], r["gold"], r["category"]) + "\n")
    with open(OUT / "dataset_baseline.jsonl", "w") as f:
        for r in records:
            f.write(line(r["id"], r["query"], baseline_gold[r["id"]], r["category"]) + "\n")

    rules = []
    for r in records:
        marker = f"[{r['id']}]"
        if r["source"] == "generic":
            cat = r["category"].upper()
            rules.append({"all_of": [GENERIC, marker], "response": f"{cat}: planted generic ambiguity", "priority": 10})
        if r["reply"] is not None:
            reason = "ambiguity changes the answer" if r["reply"] == "NEEDED" else "ambiguity is harmless here"
            rules.append({"all_of": [DECISION, marker], "response": f"{r['reply']}: {reason}", "priority": 10})
        if r["id"] in baseline_needed:
            reply = "NEEDED: Could you say which one you mean?"
        else:
            reply = "NOT_NEEDED"
        rules.append({"all_of": [BASELINE, "Query: " + marker], "response": reply, "priority": 10})
    rules.append({"contains": GENERIC, "response": "NONE: query is fully specified", "priority": 0})
    with open(OUT / "script.json", "w") as f:
        json.dump(rules, f, indent=1)
        f.write("\n")

    config = {
        "llm": {"backend": "scripted", "script": "script.json", "temperature": 0},
        "agents": {"timeout_ms": 5000},
        "choice_cap": 2,
        "knowledge": {"entities": "../../demo/entities.json", "products": "../../demo/products.json",
                      "concepts": "../../demo/concepts.json"},
        "prompts": {"few_shot": "../../fewshot.json"},
        "eval": {"parallelism": 4},
    }
    with open(OUT / "config.json", "w") as f:
        json.dump(config, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
