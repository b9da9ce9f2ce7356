#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
# Regenerates clean_fixture.cgd and clean_fixture.expected (200 records).
# Counts are computed here independently of the C++ cleaner.
import hashlib
import random

rng = random.Random(20240607)
apis = ["strcpy", "memcpy", "free", "strncat", "sprintf"]
vars_ = ["buf", "dst", "p", "len", "s", "q"]


def body(i):
    n = 2 + i % 4
    lines = []
    for k in range(n):
        v = vars_[(i + k) % len(vars_)]
        lines.append(f"{v} = {apis[(i * 7 + k) % len(apis)]}({v}, {i * 13 + k});")
    return lines


def variant(lines):
    # Equal after canonicalization: trailing blanks and edge blank lines.
    out = [l + rng.choice(["", " ", "\t", "  "]) for l in lines]
    if rng.random() < 0.3:
        out = [""] + out
    if rng.random() < 0.3:
        out = out + ["   "]
    return out


def canon(lines):
    lines = [l.rstrip(" \t\r\f\v") for l in lines]
    while lines and lines[0] == "":
        lines.pop(0)
    while lines and lines[-1] == "":
        lines.pop()
    return "\n".join(lines)


records = []
pool = list(range(90))
for rid in range(1, 201):
    b = rng.choice(pool)
    if rid <= 90:
        b = rid - 1  # every body appears at least once
    label = (b % 3 == 0) if rng.random() < 0.85 else rng.random() < 0.5
    label = int(label)
    records.append((rid, f"{rid} fixture/f{b}.c {apis[b % len(apis)]} {10 + b}", variant(body(b)), label))
rng.shuffle(records)

with open("clean_fixture.cgd", "w") as f:
    for i, (rid, header, lines, label) in enumerate(records, 1):
        header = f"{i} " + header.split(" ", 1)[1]
        f.write(header + "\n")
        for l in lines:
            f.write(l + "\n")
        f.write(f"{label}\n" + "-" * 33 + "\n")

digest_labels = {}
for _, _, lines, label in records:
    d = hashlib.sha256(canon(lines).encode()).hexdigest()
    digest_labels.setdefault(d, set()).add(label)

counts = {l: dict(original=0, cleaned=0, confliction=0, redundancy=0, both=0) for l in (0, 1)}
seen_pairs, seen_digests = set(), set()
for _, _, lines, label in records:
    d = hashlib.sha256(canon(lines).encode()).hexdigest()
    c = counts[label]
    c["original"] += 1
    if len(digest_labels[d]) > 1:
        if (d, label) in seen_pairs:
            c["both"] += 1
        else:
            c["confliction"] += 1
        seen_pairs.add((d, label))
    elif d in seen_digests:
        c["redundancy"] += 1
    else:
        c["cleaned"] += 1
    seen_digests.add(d)

with open("clean_fixture.expected", "w") as f:
    for l in (0, 1):
        for k in ("original", "cleaned", "confliction", "redundancy", "both"):
            f.write(f"class.{l}.{k} = {counts[l][k]}\n")
print(counts)
