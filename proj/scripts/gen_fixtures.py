#!/usr/bin/env python3
# Copyright (c) 2026 The mathrl Authors
# SPDX-License-Identifier: Apache-2.0
"""Deterministic test-fixture generator with independent oracles.

Regenerates everything under tests/fixtures/ plus the frozen expected
outputs the acceptance suite compares against. The oracle half of this file
re-implements the curation pipeline and the evaluation metrics from their
documented contracts, on purpose sharing no code with the C++ library, so
the two implementations check each other.

Run from the repository root:  python3 scripts/gen_fixtures.py
"""

import json
import math
import os
import re
import unicodedata

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FIX = os.path.join(ROOT, "tests", "fixtures")

INT64_MIN = -(2 ** 63)
INT64_MAX = 2 ** 63 - 1
ASCII_WS = " \t\n\r\f\v"

# Mirrors tests/fixtures/configs/curation.cfg; keep the two in sync.
CURATION_CFG = {
    "long_trace_threshold": 12800,
    "high_acc_threshold": 0.5,
    "mid_acc_lo": 0.5,
    "mid_acc_hi": 0.75,
    "hard_attempts": 4,
    "long_high_acc_cap": 140,
    "mid_acc_cap": 100,
    "hard_cap": 60,
}

# ---------------------------------------------------------------------------
# Oracle: answer extraction and verification
# ---------------------------------------------------------------------------


def extract_boxed(text):
    start = text.rfind("\\boxed{")
    if start < 0:
        return None
    depth = 1
    begin = start + 7
    for i in range(begin, len(text)):
        c = text[i]
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return text[begin:i]
    return None


def normalize_answer(raw):
    out = "".join(c for c in raw if c != "$" and c not in ASCII_WS)
    for token in ("\\left", "\\right"):
        while token in out:
            out = out.replace(token, "")
    return out


def parse_integer(s):
    if not re.fullmatch(r"-?[0-9]+", s or ""):
        return None
    v = int(s)
    if v < INT64_MIN or v > INT64_MAX:
        return None
    return v


def parse_fraction(s):
    if s.startswith("\\frac{"):
        mid = s.find("}{", 6)
        if mid < 0 or not s.endswith("}"):
            return None
        num = parse_integer(s[6:mid])
        den = parse_integer(s[mid + 2:-1])
    else:
        slash = s.find("/")
        if slash < 0:
            return None
        num = parse_integer(s[:slash])
        den = parse_integer(s[slash + 1:])
    if num is None or den is None or den == 0:
        return None
    if den < 0:
        num, den = -num, -den
    g = math.gcd(abs(num), den)
    if g > 1:
        num //= g
        den //= g
    return (num, den)


def verify_answer(extracted, ground_truth):
    if not extracted or not ground_truth:
        return False
    a = normalize_answer(extracted)
    b = normalize_answer(ground_truth)
    if not a or not b:
        return False
    ia, ib = parse_integer(a), parse_integer(b)
    if ia is not None and ib is not None:
        return ia == ib
    fa, fb = parse_fraction(a), parse_fraction(b)
    if fa is not None and fb is not None:
        return fa == fb
    return a == b


# ---------------------------------------------------------------------------
# Oracle: curation pipeline
# ---------------------------------------------------------------------------


def normalize_statement(statement):
    parts = [p for p in re.split("[" + ASCII_WS + "]+", statement) if p]
    return unicodedata.normalize("NFC", " ".join(parts))


def oracle_accuracy(problem):
    meta = problem.get("meta") or {}
    if "accuracy" not in meta:
        return None
    return float(meta["accuracy"])


def bump(drops, reason):
    drops[reason] = drops.get(reason, 0) + 1


def filter_long_high_acc(records, cfg):
    kept, drops = [], {}
    for r in records:
        acc = oracle_accuracy(r["problem"])
        if acc is None:
            bump(drops, "missing_accuracy")
            continue
        counts = [t["token_count"] for t in r.get("traces") or []]
        if not counts:
            bump(drops, "no_traces")
            continue
        if max(counts) <= cfg["long_trace_threshold"]:
            bump(drops, "short_trace")
            continue
        if acc <= cfg["high_acc_threshold"]:
            bump(drops, "low_accuracy")
            continue
        kept.append(r)
    return kept, drops


def filter_mid_acc(records, cfg):
    kept, drops = [], {}
    for r in records:
        acc = oracle_accuracy(r["problem"])
        if acc is None:
            bump(drops, "missing_accuracy")
            continue
        if acc < cfg["mid_acc_lo"] or acc > cfg["mid_acc_hi"]:
            bump(drops, "outside_band")
            continue
        kept.append(r)
    return kept, drops


def filter_hard_unsolved(records, cfg):
    kept, drops = [], {}
    n = cfg["hard_attempts"]
    for r in records:
        attempts = r.get("attempts") or []
        if len(attempts) < n:
            bump(drops, "too_few_attempts")
            continue
        if any(attempts[:n]):
            bump(drops, "solved_within_attempts")
            continue
        kept.append(r)
    return kept, drops


def apply_cap(kept, drops, cap):
    if cap is not None and len(kept) > cap:
        drops["over_cap"] = drops.get("over_cap", 0) + len(kept) - cap
        kept = kept[:cap]
    return kept, drops


def backfill_answer(record):
    extractions = []
    votes = {}
    for t in record["traces"]:
        boxed = extract_boxed(t["text"])
        if boxed is not None:
            votes[boxed] = votes.get(boxed, 0) + 1
            extractions.append((t, boxed))
    if not extractions:
        return None
    best = max(votes.values())
    extractions.sort(key=lambda e: (e[0]["token_count"], e[0]["text"]))
    for trace, answer in extractions:
        if votes[answer] == best:
            out = json.loads(json.dumps(record))
            out["problem"]["answer"] = answer
            return out
    return None


def select_shortest_correct(problem, traces):
    answer = problem.get("answer")
    if not answer:
        return None
    best = None
    best_boxed = None
    for t in traces:
        boxed = extract_boxed(t["text"])
        if boxed is None or not verify_answer(boxed, answer):
            continue
        if best is None or (t["token_count"], t["text"]) < (
            best["token_count"],
            best["text"],
        ):
            best = t
            best_boxed = boxed
    if best is None:
        return None
    trace = dict(best)
    trace["extracted_answer"] = best_boxed
    trace["correct"] = True
    return {"problem": problem, "trace": trace, "answer": answer}


def oracle_build(math_records, hard_records, light_records, cfg):
    stages = []
    merged = []

    def stage(name, input_count, kept, drops):
        stages.append(
            {
                "stage": name,
                "input": input_count,
                "output": len(kept),
                "dropped": input_count - len(kept),
                "drop_reasons": {k: drops[k] for k in sorted(drops)},
            }
        )
        merged.extend(kept)

    kept, drops = filter_long_high_acc(math_records, cfg)
    kept, drops = apply_cap(kept, drops, cfg["long_high_acc_cap"])
    stage("openr1_math:long_high_acc", len(math_records), kept, drops)

    kept, drops = filter_mid_acc(math_records, cfg)
    kept, drops = apply_cap(kept, drops, cfg["mid_acc_cap"])
    stage("openr1_math:mid_acc", len(math_records), kept, drops)

    kept, drops = filter_hard_unsolved(hard_records, cfg)
    kept, drops = apply_cap(kept, drops, cfg["hard_cap"])
    stage("openr1_hard:hard_unsolved", len(hard_records), kept, drops)

    stage("light_r1_stage2:passthrough", len(light_records), list(light_records), {})

    merge_input = list(merged)
    stages.append(
        {
            "stage": "merge",
            "input": len(merge_input),
            "output": len(merge_input),
            "dropped": 0,
            "drop_reasons": {},
        }
    )

    seen = set()
    deduped = []
    dedup_drops = {}
    for r in merge_input:
        key = normalize_statement(r["problem"]["statement"])
        if key in seen:
            bump(dedup_drops, "duplicate_statement")
        else:
            seen.add(key)
            deduped.append(r)
    stages.append(
        {
            "stage": "dedup",
            "input": len(merge_input),
            "output": len(deduped),
            "dropped": len(merge_input) - len(deduped),
            "drop_reasons": {k: dedup_drops[k] for k in sorted(dedup_drops)},
        }
    )

    answered = []
    backfill_drops = {}
    for r in deduped:
        if r["problem"].get("answer"):
            answered.append(r)
            continue
        filled = backfill_answer(r)
        if filled is not None:
            answered.append(filled)
        else:
            bump(backfill_drops, "no_extractable_answer")
    stages.append(
        {
            "stage": "backfill",
            "input": len(deduped),
            "output": len(answered),
            "dropped": len(deduped) - len(answered),
            "drop_reasons": {k: backfill_drops[k] for k in sorted(backfill_drops)},
        }
    )

    triplets = []
    select_drops = {}
    for r in answered:
        t = select_shortest_correct(r["problem"], r["traces"])
        if t is not None:
            triplets.append(t)
        else:
            bump(select_drops, "no_correct_trace")
    stages.append(
        {
            "stage": "select_shortest_correct",
            "input": len(answered),
            "output": len(triplets),
            "dropped": len(answered) - len(triplets),
            "drop_reasons": {k: select_drops[k] for k in sorted(select_drops)},
        }
    )

    return triplets, {"stages": stages, "triplets": len(triplets)}


# ---------------------------------------------------------------------------
# Fixture construction: curation corpus
# ---------------------------------------------------------------------------


def trace(problem_id, text, token_count, extracted=None, correct=None):
    t = {"problem_id": problem_id, "text": text, "token_count": token_count}
    if extracted is not None:
        t["extracted_answer"] = extracted
    if correct is not None:
        t["correct"] = correct
    return t


def problem(pid, statement, source, answer=None, accuracy=None, extra_meta=None):
    p = {"id": pid, "statement": statement, "source": source}
    if answer is not None:
        p["answer"] = answer
    meta = dict(extra_meta or {})
    if accuracy is not None:
        meta["accuracy"] = accuracy
    if meta:
        p["meta"] = meta
    return p


def make_math_records():
    """500 records; indices 0..149 target the long+high-accuracy filter with
    boundary plants, 150..299 the mid-accuracy band, 300..319 extra
    long+high records that push past the cap, 320..499 low-value filler."""
    records = []
    for i in range(500):
        pid = f"m{i:04d}"
        stmt = f"Problem M{i}: evaluate the closed form of series S{i} at n = {i + 2}."
        if i % 40 == 15:
            stmt = f"Problem M{i}: how many ways can the caf\u00e9 menu {i} be ordered?"
        case = i % 25

        if i < 150:
            ans = str((i * 3) % 100)
            long_tokens = 13000 + (i % 2000)
            if case == 0:
                # accuracy exactly at the strict threshold: dropped by the
                # long filter, but inside the closed mid band.
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", ans, "0.5"),
                        "traces": [
                            trace(pid, f"mid route. \\boxed{{{ans}}}", 900 + i),
                            trace(pid, f"long route. \\boxed{{{ans}}}", long_tokens),
                        ],
                    }
                )
            elif case == 1:
                # longest trace exactly equal to the threshold: dropped.
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", ans, "0.8"),
                        "traces": [trace(pid, f"edge. \\boxed{{{ans}}}", 12800)],
                    }
                )
            elif case == 2:
                # one past the threshold: kept.
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", ans, "0.8"),
                        "traces": [
                            trace(pid, f"just long enough. \\boxed{{{ans}}}", 12801),
                            trace(pid, f"short check. \\boxed{{{ans}}}", 700 + i),
                        ],
                    }
                )
            elif case == 3:
                records.append(
                    {"problem": problem(pid, stmt, "openr1_math", ans, "0.9"),
                     "traces": []}
                )
            elif case == 4:
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", ans),
                        "traces": [trace(pid, f"orphan. \\boxed{{{ans}}}", 14000)],
                    }
                )
            elif case == 5:
                # backfill by majority: three traces box 42, one boxes 7.
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", None, "0.9"),
                        "traces": [
                            trace(pid, "path a gives \\boxed{42}", 1000),
                            trace(pid, "path b gives \\boxed{42}", 1200),
                            trace(pid, "path c gives \\boxed{42}", 900),
                            trace(pid, "outlier gives \\boxed{7}", 14000),
                        ],
                    }
                )
            elif case == 6:
                # backfill 2-vs-2 tie: shortest trace boxes 5.
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", None, "0.9"),
                        "traces": [
                            trace(pid, "first vote \\boxed{5}", 500),
                            trace(pid, "second vote \\boxed{9}", 600),
                            trace(pid, "third vote \\boxed{9}", 700),
                            trace(pid, "fourth vote \\boxed{5}", 13500),
                        ],
                    }
                )
            elif case == 7:
                # nothing extractable anywhere: dropped at backfill.
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", None, "0.9"),
                        "traces": [
                            trace(pid, "no boxed content at all", 13000),
                            trace(pid, "unbalanced \\boxed{12", 400),
                        ],
                    }
                )
            elif case == 8:
                # every boxed answer is wrong: dropped at selection.
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", "42", "0.9"),
                        "traces": [
                            trace(pid, "confidently wrong \\boxed{41}", 13200),
                            trace(pid, "also wrong \\boxed{43}", 800),
                        ],
                    }
                )
            elif case == 9:
                # token-count tie between correct traces: smaller text wins.
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", ans, "0.9"),
                        "traces": [
                            trace(pid, f"zeta route \\boxed{{{ans}}}", 950),
                            trace(pid, f"alpha route \\boxed{{{ans}}}", 950),
                            trace(pid, f"long spine \\boxed{{{ans}}}", 15000),
                        ],
                    }
                )
            elif case in (10, 11):
                # accuracy 0.6 passes the long filter AND sits in the mid
                # band, so the record enters the merge twice and the second
                # copy is deduplicated.
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", ans, "0.6"),
                        "traces": [
                            trace(pid, f"dual qualifier \\boxed{{{ans}}}", 13100),
                            trace(pid, f"short dual \\boxed{{{ans}}}", 640 + i),
                        ],
                    }
                )
            elif case == 12:
                # stored correctness metadata lies; the pipeline recomputes.
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", "10", "0.9"),
                        "traces": [
                            trace(pid, "labelled right, boxes \\boxed{99}", 600,
                                  extracted="10", correct=True),
                            trace(pid, "labelled wrong, boxes \\boxed{10}", 13050,
                                  extracted="99", correct=False),
                        ],
                    }
                )
            elif case == 13:
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", "1/2", "0.9"),
                        "traces": [
                            trace(pid, "fraction form \\boxed{\\frac{1}{2}}", 1100),
                            trace(pid, "padding trace \\boxed{\\frac{1}{2}}", 14200),
                        ],
                    }
                )
            elif case == 14:
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", "\\frac{2}{4}",
                                           "0.9"),
                        "traces": [
                            trace(pid, "reduced \\boxed{1/2}", 1050),
                            trace(pid, "long reduced \\boxed{1/2}", 13900),
                        ],
                    }
                )
            elif case == 16:
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", "x^{2}+1", "0.9"),
                        "traces": [
                            trace(pid, "nested \\boxed{x^{2}+1} done", 1600),
                            trace(pid, "nested long \\boxed{x^{2}+1}", 13300),
                        ],
                    }
                )
            elif case == 17:
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", "$42$", "0.9"),
                        "traces": [
                            trace(pid, "dollar free \\boxed{42}", 840),
                            trace(pid, "dollar free long \\boxed{42}", 14100),
                        ],
                    }
                )
            elif case == 18:
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math",
                                           "\\left(3,4\\right)", "0.9"),
                        "traces": [
                            trace(pid, "bare pair \\boxed{(3,4)}", 910),
                            trace(pid, "bare pair long \\boxed{(3,4)}", 13700),
                        ],
                    }
                )
            elif case == 19:
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", "-17", "0.9"),
                        "traces": [
                            trace(pid, "negative \\boxed{-17}", 760),
                            trace(pid, "negative long \\boxed{-17}", 13600),
                        ],
                    }
                )
            elif case == 20:
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", "3/-4", "0.9"),
                        "traces": [
                            trace(pid, "sign moved \\boxed{-3/4}", 980),
                            trace(pid, "sign moved long \\boxed{-3/4}", 14400),
                        ],
                    }
                )
            elif case == 21:
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", "42", "0.9"),
                        "traces": [
                            trace(pid, "spaced \\boxed{ 42 } fine", 860),
                            trace(pid, "spaced long \\boxed{ 42 }", 14600),
                        ],
                    }
                )
            else:
                # plain keeper: shortest correct trace is not the longest,
                # and an even shorter trace is wrong.
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", ans, "0.8",
                                           {"difficulty": str(i % 5)}),
                        "traces": [
                            trace(pid, "tempting but wrong \\boxed{99999}", 300),
                            trace(pid, f"short correct \\boxed{{{ans}}}", 800 + i),
                            trace(pid, f"long correct \\boxed{{{ans}}}", long_tokens),
                        ],
                    }
                )
        elif i < 300:
            # mid-accuracy band plants (traces deliberately short).
            ans = str((i * 5) % 89)
            band_case = i % 15
            acc = {0: "0.49", 1: "0.751", 2: "0.5", 3: "0.75"}.get(band_case, "0.625")
            if band_case == 4:
                acc = None
            if band_case == 5:
                # in-band backfill case.
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", None, acc),
                        "traces": [
                            trace(pid, "vote one \\boxed{64}", 2000),
                            trace(pid, "vote two \\boxed{64}", 2100),
                            trace(pid, "stray vote \\boxed{63}", 1900),
                        ],
                    }
                )
            elif band_case == 6:
                # in-band but unverifiable: dropped at selection.
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", "7", acc),
                        "traces": [trace(pid, "misses with \\boxed{8}", 2200)],
                    }
                )
            elif band_case == 7:
                # in-band record with no traces survives to selection, where
                # it drops for lack of a correct trace.
                records.append(
                    {"problem": problem(pid, stmt, "openr1_math", ans, acc),
                     "traces": []}
                )
            else:
                records.append(
                    {
                        "problem": problem(pid, stmt, "openr1_math", ans, acc),
                        "traces": [
                            trace(pid, f"band body \\boxed{{{ans}}}", 4000 + i),
                            trace(pid, f"band quick \\boxed{{{ans}}}", 900 + (i % 97)),
                        ],
                    }
                )
        elif i < 320:
            # cap pressure: more qualifying long+high records than the cap.
            ans = str(i)
            records.append(
                {
                    "problem": problem(pid, stmt, "openr1_math", ans, "0.85"),
                    "traces": [
                        trace(pid, f"overflow long \\boxed{{{ans}}}", 14000 + i),
                        trace(pid, f"overflow short \\boxed{{{ans}}}", 1000 + i),
                    ],
                }
            )
        else:
            # filler rejected by both math filters.
            ans = str(i % 50)
            records.append(
                {
                    "problem": problem(pid, stmt, "openr1_math", ans, "0.3"),
                    "traces": [trace(pid, f"short low \\boxed{{{ans}}}", 500 + (i % 300))],
                }
            )
    return records


def make_hard_records(math_records):
    """300 records; 0..99 cycle through attempt-window plants, the rest are
    solved within the window. Five kept records duplicate math statements."""
    kept_math_statements = [
        r["problem"]["statement"]
        for r in math_records
        if r["problem"].get("meta", {}).get("accuracy") == "0.8"
        and int(r["problem"]["id"][1:]) % 25 != 1  # boundary plant is dropped
        and int(r["problem"]["id"][1:]) < 150
    ]
    records = []
    for i in range(300):
        pid = f"h{i:04d}"
        stmt = f"Problem H{i}: find the minimal witness for property P{i}."
        ans = str((i * 7) % 113)
        case = i % 10
        if i >= 100:
            attempts = [True, False, False, False]
        elif case == 0:
            attempts = [False, False]
        elif case == 1:
            attempts = [True, False, False, False]
        elif case == 2:
            attempts = [False, False, False, True]
        elif case == 3:
            # solved only on the 5th attempt: outside the window, so kept.
            attempts = [False, False, False, False, True]
        elif case == 4:
            attempts = [False] * 8
        else:
            attempts = [False, False, False, False]
            if case == 5 and i // 10 < 5:
                # duplicate of a surviving math statement; merged after the
                # math batches, so dedup drops this copy.
                stmt = kept_math_statements[i // 10]

        if case == 6 and i < 100:
            rec = {
                "problem": problem(pid, stmt, "openr1_hard", None),
                "traces": [
                    trace(pid, "hard consensus \\boxed{271}", 5000),
                    trace(pid, "hard consensus \\boxed{271}", 5200),
                ],
                "attempts": attempts,
            }
        elif case == 7 and i < 100:
            rec = {
                "problem": problem(pid, stmt, "openr1_hard", "17"),
                "traces": [trace(pid, "hard miss \\boxed{18}", 4800)],
                "attempts": attempts,
            }
        elif case == 8 and i < 100:
            rec = {
                "problem": problem(pid, stmt, "openr1_hard", "29"),
                "traces": [],
                "attempts": attempts,
            }
        else:
            rec = {
                "problem": problem(pid, stmt, "openr1_hard", ans),
                "traces": [
                    trace(pid, f"hard quick \\boxed{{{ans}}}", 3000 + i),
                    trace(pid, f"hard slow \\boxed{{{ans}}}", 9000 + i),
                ],
                "attempts": attempts,
            }
        records.append(rec)
    return records


def make_light_records(count):
    records = []
    for i in range(count):
        pid = f"l{i:04d}"
        stmt = f"Problem L{i}: compute invariant I{i} of configuration C{i}."
        ans = str((i * 11) % 71)
        case = i % 8
        if case == 0:
            rec = {
                "problem": problem(pid, stmt, "light_r1_stage2", None),
                "traces": [
                    trace(pid, "light vote \\boxed{88}", 1500),
                    trace(pid, "light vote \\boxed{88}", 1600),
                    trace(pid, "light stray \\boxed{87}", 1400),
                ],
            }
        elif case == 1:
            rec = {
                "problem": problem(pid, stmt, "light_r1_stage2", ""),
                "traces": [trace(pid, "empty answer backfilled \\boxed{31}", 1700)],
            }
        elif case == 2:
            rec = {
                "problem": problem(pid, stmt, "light_r1_stage2", "3"),
                "traces": [trace(pid, "light wrong \\boxed{4}", 1800)],
            }
        elif case == 3:
            rec = {
                "problem": problem(pid, stmt, "light_r1_stage2", "6"),
                "traces": [],
            }
        elif case == 4:
            rec = {
                "problem": problem(pid, stmt, "light_r1_stage2", None),
                "traces": [trace(pid, "nothing boxed here", 1300)],
            }
        else:
            rec = {
                "problem": problem(pid, stmt, "light_r1_stage2", ans),
                "traces": [
                    trace(pid, f"light best \\boxed{{{ans}}}", 1000 + i),
                    trace(pid, f"light alt \\boxed{{{ans}}}", 2000 + i),
                ],
            }
        records.append(rec)
    return records


def make_duplicate_light_records(n, survivor_statements, start_index):
    """Records whose statements collide (after normalization) with records
    already in the merge; variants exercise whitespace collapse and NFC."""
    records = []
    for k in range(n):
        pid = f"l{start_index + k:04d}"
        target = survivor_statements[(k * 7 + 3) % len(survivor_statements)]
        variant = k % 3
        if variant == 0:
            stmt = target
        elif variant == 1:
            stmt = "  " + target.replace(" ", "  \t", 1) + " \n"
        else:
            stmt = unicodedata.normalize("NFD", target)
        assert normalize_statement(stmt) == normalize_statement(target)
        records.append(
            {
                "problem": problem(pid, stmt, "light_r1_stage2", "1"),
                "traces": [trace(pid, "duplicate carrier \\boxed{1}", 990 + k)],
            }
        )
    return records


# ---------------------------------------------------------------------------
# Fixture construction: evaluation
# ---------------------------------------------------------------------------

BENCH_ANSWERS = ["42", "-7", "1/2", "0", "100", "17", "3/4", "9", "256", "5"]
PLANTED_COUNTS = [64, 0, 32, 48, 16, 1, 63, 8, 56, 40]
BASE_COUNTS = [2, 1, 4, 3, 2, 5, 1, 0, 3, 2]
TUNED_COUNTS = [5, 3, 6, 5, 4, 7, 3, 2, 6, 5]


def boxed_form(answer):
    """The form completions box; exercises fraction notation equivalence."""
    if answer == "1/2":
        return "\\frac{1}{2}"
    if answer == "3/4":
        return "\\frac{3}{4}"
    return answer


def make_benchmark():
    problems = []
    for i, ans in enumerate(BENCH_ANSWERS):
        problems.append(
            {
                "id": f"p{i:02d}",
                "statement": f"Benchmark problem {i}: determine the quantity Q{i}.",
                "answer": ans,
                "source": "other",
            }
        )
    return problems


def completion_text(words, final_token):
    return " ".join([f"w{t}" for t in range(words - 1)] + [final_token])


def make_sim_fixture(counts, k, word_base, word_span, tag):
    lines = []
    per_problem_tokens = []
    for i, ans in enumerate(BENCH_ANSWERS):
        completions = []
        tokens = []
        for j in range(k):
            words = word_base + ((37 * i + 13 * j + len(tag)) % word_span)
            correct = j < counts[i]
            if correct:
                text = completion_text(words, f"\\boxed{{{boxed_form(ans)}}}")
            elif j % 3 == 0:
                text = completion_text(words, f"w{words - 1}")
            else:
                text = completion_text(words, f"\\boxed{{{10000 + j}}}")
            completions.append({"text": text})
            tokens.append(words)
        lines.append({"id": f"p{i:02d}", "completions": completions})
        per_problem_tokens.append(tokens)
    return lines, per_problem_tokens


def pass1_expected(counts, per_problem_tokens, k):
    per_problem = []
    sum_fraction = 0.0
    sum_mean_tokens = 0.0
    for i, tokens in enumerate(per_problem_tokens):
        mean_tokens = sum(tokens) / k
        fraction = counts[i] / k
        sum_fraction += fraction
        sum_mean_tokens += mean_tokens
        per_problem.append(
            {
                "problem_id": f"p{i:02d}",
                "correct_count": counts[i],
                "k": k,
                "pass1_pct": 100.0 * fraction,
                "mean_tokens": mean_tokens,
            }
        )
    n = len(per_problem_tokens)
    return {
        "aggregate_pct": 100.0 * sum_fraction / n,
        "aggregate_mean_tokens": sum_mean_tokens / n,
        "per_problem": per_problem,
    }


# Hand-placed box positions for the budget-truncation curve. box_at is the
# 1-indexed token position of the \boxed token; None means a wrong answer.
BUDGET_PROBLEMS = [
    {
        "problem_id": "q0",
        "answer": "7",
        "samples": [
            {"words": 5000, "box_at": 4000, "correct": True},
            {"words": 9000, "box_at": 8500, "correct": True},
            {"words": 14000, "box_at": 12800, "correct": True},
            {"words": 33000, "box_at": 32500, "correct": True},
        ],
    },
    {
        "problem_id": "q1",
        "answer": "12",
        "samples": [
            {"words": 9000, "box_at": 8000, "correct": True},
            {"words": 9000, "box_at": 8001, "correct": True},
            {"words": 6000, "box_at": 5999, "correct": False},
            {"words": 20000, "box_at": 100, "correct": True},
        ],
    },
    {
        "problem_id": "q2",
        "answer": "5",
        "samples": [
            {"words": 12000, "box_at": 11000, "correct": True},
            {"words": 16000, "box_at": 15000, "correct": True},
            {"words": 24000, "box_at": 23000, "correct": True},
            {"words": 32000, "box_at": 31000, "correct": True},
        ],
    },
]

BUDGETS = [8000, 12000, 16000, 24000, 32000]


def budget_curve_expected():
    k = 4
    curve = []
    for budget in BUDGETS:
        sum_fraction = 0.0
        sum_mean_tokens = 0.0
        for q in BUDGET_PROBLEMS:
            correct = 0
            token_sum = 0
            for s in q["samples"]:
                effective = min(s["words"], budget)
                token_sum += effective
                # The box survives truncation iff it sits at or before the
                # budget-th token.
                if s["correct"] and (s["words"] <= budget or s["box_at"] <= budget):
                    correct += 1
            sum_fraction += correct / k
            sum_mean_tokens += token_sum / k
        n = len(BUDGET_PROBLEMS)
        curve.append(
            {
                "budget": budget,
                "pass1_pct": 100.0 * sum_fraction / n,
                "mean_effective_tokens": sum_mean_tokens / n,
            }
        )
    return curve


# ---------------------------------------------------------------------------
# Fixture construction: toy bandit
# ---------------------------------------------------------------------------


def make_toy_bandit():
    problems = []
    for i, ans in enumerate(["11", "23", "37", "53"]):
        pid = f"t{i:02d}"
        wrong = str(int(ans) + 1)
        problems.append(
            {
                "id": pid,
                "statement": f"Toy problem {i}: find the prime labelled {i}.",
                "answer": ans,
                "candidates": [
                    {"text": f"Direct route. \\boxed{{{ans}}} </think>",
                     "token_count": 40},
                    {"text": f"Longer exploration with detours. \\boxed{{{ans}}} "
                             f"</think>",
                     "token_count": 2000},
                    {"text": f"Hasty guess. \\boxed{{{wrong}}} </think>",
                     "token_count": 40},
                    {"text": "Rambling with no conclusion.", "token_count": 100},
                ],
            }
        )
    return problems


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------


def write_jsonl(path, rows):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False, separators=(",", ":")) + "\n")


def write_json(path, obj):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(obj, ensure_ascii=False, indent=2) + "\n")


def write_text(path, text):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def main():
    # --- curation corpus -----------------------------------------------
    math_records = make_math_records()
    hard_records = make_hard_records(math_records)

    # First pass without duplicate carriers, to measure structural
    # duplicates, then pad with light-source duplicates to exactly 100.
    probe_light = make_light_records(200)
    _, probe_stats = oracle_build(math_records, hard_records, probe_light,
                                  CURATION_CFG)
    structural = next(
        s for s in probe_stats["stages"] if s["stage"] == "dedup"
    )["drop_reasons"].get("duplicate_statement", 0)
    fillers = 100 - structural
    assert 0 < fillers < 200, f"structural duplicate count {structural} out of range"

    organic_count = 200 - fillers
    light_records = make_light_records(organic_count)

    # Duplicate targets must already be in the merge when the copy arrives.
    probe_triplets, _ = oracle_build(math_records, hard_records, light_records,
                                     CURATION_CFG)
    survivor_statements = [t["problem"]["statement"] for t in probe_triplets]
    light_records += make_duplicate_light_records(fillers, survivor_statements,
                                                  organic_count)
    assert len(math_records) + len(hard_records) + len(light_records) == 1000

    triplets, stats = oracle_build(math_records, hard_records, light_records,
                                   CURATION_CFG)
    dedup_stage = next(s for s in stats["stages"] if s["stage"] == "dedup")
    assert dedup_stage["drop_reasons"]["duplicate_statement"] == 100, dedup_stage

    # Every named drop reason must actually occur.
    seen_reasons = set()
    for s in stats["stages"]:
        seen_reasons.update(s["drop_reasons"])
    expected_reasons = {
        "missing_accuracy", "no_traces", "short_trace", "low_accuracy",
        "outside_band", "too_few_attempts", "solved_within_attempts",
        "over_cap", "duplicate_statement", "no_extractable_answer",
        "no_correct_trace",
    }
    assert expected_reasons <= seen_reasons, expected_reasons - seen_reasons
    assert len(triplets) > 250, len(triplets)

    write_jsonl(os.path.join(FIX, "curation", "openr1_math.jsonl"), math_records)
    write_jsonl(os.path.join(FIX, "curation", "openr1_hard.jsonl"), hard_records)
    write_jsonl(os.path.join(FIX, "curation", "light_r1_stage2.jsonl"),
                light_records)
    write_jsonl(os.path.join(FIX, "curation", "expected_sft_dataset.jsonl"),
                triplets)
    write_json(os.path.join(FIX, "curation", "expected_stats.json"), stats)

    # --- toy bandit ------------------------------------------------------
    write_jsonl(os.path.join(FIX, "toy_bandit.jsonl"), make_toy_bandit())

    # --- evaluation ------------------------------------------------------
    write_jsonl(os.path.join(FIX, "eval", "benchmark_10.jsonl"), make_benchmark())

    planted, planted_tokens = make_sim_fixture(PLANTED_COUNTS, 64, 10, 40, "planted")
    write_jsonl(os.path.join(FIX, "eval", "planted_64.jsonl"), planted)
    write_json(os.path.join(FIX, "eval", "expected_pass1.json"),
               pass1_expected(PLANTED_COUNTS, planted_tokens, 64))

    base, _ = make_sim_fixture(BASE_COUNTS, 8, 120, 100, "base")
    tuned, _ = make_sim_fixture(TUNED_COUNTS, 8, 40, 50, "tuned")
    write_jsonl(os.path.join(FIX, "eval", "sim_base.jsonl"), base)
    write_jsonl(os.path.join(FIX, "eval", "sim_tuned.jsonl"), tuned)

    write_json(os.path.join(FIX, "eval", "budget_fixture.json"),
               {"k": 4, "budgets": BUDGETS, "problems": BUDGET_PROBLEMS})
    write_json(os.path.join(FIX, "eval", "expected_budget_curve.json"),
               budget_curve_expected())

    # --- reward samples --------------------------------------------------
    write_text(
        os.path.join(FIX, "reward", "good_completion.txt"),
        "Let me reason carefully. 21 doubled is 42, so \\boxed{42} </think> "
        "The final answer is 42.\n",
    )
    write_text(
        os.path.join(FIX, "reward", "unboxed_completion.txt"),
        "The answer is 42 but I forgot the box and the closing tag.\n",
    )

    print(f"curation triplets: {len(triplets)}")
    print(f"light filler duplicates: {fillers}")
    print(f"planted pass@1 aggregate: "
          f"{pass1_expected(PLANTED_COUNTS, planted_tokens, 64)['aggregate_pct']}")
    print("fixtures written to", FIX)


if __name__ == "__main__":
    main()
