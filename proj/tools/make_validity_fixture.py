#!/usr/bin/env python3
"""Writes a synthetic labelling-study fixture (images.jsonl, labels.jsonl).

The per-image labels are constructed, not observed: they are arranged so the
aggregate counts match the published ones (2629 attacked images, 727 of them
invalid, 284 of those deceptive; per-user adversarial correct counts 1571,
1906, 1548 for the three humans and 1160 for the machine labeller).
"""
import argparse
import json
import pathlib

CLASSES = ["airplane", "automobile", "bird", "cat", "deer",
           "dog", "frog", "horse", "ship", "truck"]

N_IMAGES = 2629
N_VALID = 1902
N_DECEPTIVE = 284
HUMANS = ["h1", "h2", "h3"]
MACHINE = "gpt4"
CLEAN_CORRECT = {"h1": 2239, "h2": 2429, "h3": 2083}


def valid_correct(user, i):
    return {"h1": i < 1471, "h2": i < 1803, "h3": i >= 454, MACHINE: i >= 802}[user]


def invalid_correct(user, j):
    return {"h1": j < 100, "h2": 100 <= j < 203, "h3": 203 <= j < 303,
            MACHINE: 303 <= j < 363}[user]


def other_class(gt, sota, k):
    pool = [c for c in CLASSES if c not in (gt, sota)]
    return pool[k % len(pool)]


def build():
    images, labels = [], []
    for p in range(N_IMAGES):
        image_id = "adv-%04d" % p
        c = (p * 1013) % N_IMAGES  # scatter the categories over the id range
        gt_idx = (p * 7) % 10
        gt = CLASSES[gt_idx]
        sota = CLASSES[(gt_idx + 1 + p % 9) % 10]
        images.append({"image_id": image_id, "ground_truth": gt, "sota_prediction": sota})

        valid = c < N_VALID
        j = c - N_VALID
        for k, user in enumerate(HUMANS + [MACHINE]):
            kind = "machine" if user == MACHINE else "human"
            ok = valid_correct(user, c) if valid else invalid_correct(user, j)
            if ok:
                pred = gt
                if valid:
                    conf = "low" if (p + k) % 4 == 0 else "high"
                else:
                    conf = "high" if kind == "machine" else "low"
            elif valid:
                pred = other_class(gt, sota, p + k)
                conf = "high" if (p + k) % 7 == 0 else "low"
            elif j < N_DECEPTIVE:
                pred = sota
                conf = "high" if (p + k) % 3 == 0 else "low"
            else:
                pred = other_class(gt, sota, k) if kind == "human" else sota
                conf = "low"
            labels.append({"user_id": user, "user_kind": kind, "image_id": image_id,
                           "condition": "adversarial", "predicted_class": pred,
                           "confidence": conf})

    for k, user in enumerate(HUMANS):
        for p in range(N_IMAGES):
            rank = (p * (211 + 2 * k) + 17 * k) % N_IMAGES
            gt = images[p]["ground_truth"]
            ok = rank < CLEAN_CORRECT[user]
            labels.append({"user_id": user, "user_kind": "human",
                           "image_id": images[p]["image_id"], "condition": "clean",
                           "predicted_class": gt if ok else other_class(gt, gt, p),
                           "confidence": "high" if ok and p % 5 else "low"})
    return images, labels


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="data/validity")
    args = ap.parse_args()
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    images, labels = build()
    with open(out / "images.jsonl", "w") as f:
        for r in images:
            f.write(json.dumps(r, separators=(",", ":")) + "\n")
    with open(out / "labels.jsonl", "w") as f:
        for r in labels:
            f.write(json.dumps(r, separators=(",", ":")) + "\n")


if __name__ == "__main__":
    main()
