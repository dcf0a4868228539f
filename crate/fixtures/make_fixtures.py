"""Regenerates the bundled fixture datasets.

Run from this directory: python3 make_fixtures.py
Outputs are committed; rerunning must not change them.
"""

import json
import os

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
DIMS = 18


def write(path, text):
    full = os.path.join(HERE, path)
    os.makedirs(os.path.dirname(full), exist_ok=True)
    with open(full, "w", newline="\n") as fh:
        fh.write(text)


def dump_json(path, obj):
    write(path, json.dumps(obj, indent=2) + "\n")


def year_signal(year):
    # maps roughly -300..700 onto 0..1
    return (year + 300) / 1000.0


def pll(rng):
    """Features-CSV dataset with a document-level split done by the harness."""
    years = [int(y) for y in np.linspace(-290, 680, 30).round()]
    years = [y if y != 0 else 1 for y in years]
    docs, rows = [], []
    for i, year in enumerate(years):
        doc_id = f"P{i + 1:03d}"
        n_lines = int(rng.integers(1, 5))
        lines = []
        for j in range(n_lines):
            line_id = f"l{j + 1}"
            s = year_signal(year)
            feats = [s * (0.5 + 0.05 * k) + rng.normal(0, 0.03) for k in range(DIMS)]
            rows.append([doc_id, line_id] + [f"{v:.6f}" for v in feats])
            lines.append({"line_id": line_id, "features": "features.csv"})
        docs.append({"doc_id": doc_id, "ground_truth_year": year, "lines": lines})
    header = "doc_id,line_id," + ",".join(f"f{k}" for k in range(DIMS))
    write("pll/features.csv", header + "\n" + "".join(",".join(r) + "\n" for r in rows))
    dump_json("pll/manifest.json", {"name": "pll", "documents": docs})


def line_image(rng, year, width=32, height=12):
    """Light background with dark strokes; stroke count grows with the year."""
    img = rng.integers(200, 246, size=(height, width))
    strokes = 2 + int(round(year_signal(year) * 10))
    for _ in range(strokes):
        x = int(rng.integers(0, width - 2))
        y0 = int(rng.integers(0, height // 2))
        y1 = int(rng.integers(height // 2, height))
        img[y0:y1, x : x + 2] = rng.integers(15, 70, size=(y1 - y0, 2))
    return img.astype(np.uint8)


def hd(rng):
    """PGM-image dataset carrying its own split labels."""
    years = [int(y) for y in np.linspace(-240, 590, 24).round()]
    years = [y if y != 0 else 1 for y in years]
    labels = ["train", "train", "val", "train", "test", "train"] * 4
    docs, splits = [], {}
    for i, (year, label) in enumerate(zip(years, labels)):
        doc_id = f"H{i + 1:02d}"
        n_lines = 2 if i % 3 else 3
        lines = []
        for j in range(n_lines):
            line_id = str(j + 1)
            img = line_image(rng, year)
            name = f"images/{doc_id}_{line_id}.pgm"
            full = os.path.join(HERE, "hd", name)
            os.makedirs(os.path.dirname(full), exist_ok=True)
            h, w = img.shape
            with open(full, "wb") as fh:
                fh.write(f"P5\n# fixture {doc_id}/{line_id}\n{w} {h}\n255\n".encode())
                fh.write(img.tobytes())
            lines.append({"line_id": line_id, "image": name})
            splits[f"{doc_id}/{line_id}"] = label
        docs.append({"doc_id": doc_id, "ground_truth_year": year, "lines": lines})
    dump_json("hd/manifest.json", {"name": "hd", "documents": docs, "splits": splits})


def eval_fixture():
    truth = {"E1": 100, "E2": -150, "E3": 320, "E4": 45}
    preds = [
        ("E1", "1", 1.2),  # error 0.2
        ("E1", "2", 0.4),  # error 0.6
        ("E1", "3", 2.0),  # error 1.0
        ("E2", "1", -1.5),
        ("E2", "2", -1.1),
        ("E3", "1", 3.05),
        ("E3", "2", 3.6),
        ("E3", "3", 2.7),
        ("E3", "4", 3.2),
        ("E4", "1", 1.9),
    ]
    write("eval/truth.csv", "doc_id,year\n" + "".join(f"{d},{y}\n" for d, y in truth.items()))
    write(
        "eval/preds.csv",
        "doc_id,line_id,pred_century\n" + "".join(f"{d},{l},{p}\n" for d, l, p in preds),
    )


def experts_fixture(rng):
    """Five experts over twelve lines; E02 never abstains."""
    truth = {"D1": -210, "D2": -95, "D3": 30, "D4": 115, "D5": 260, "D6": 410, "D7": 530}
    lines = [("D1", "a"), ("D1", "b"), ("D2", "a"), ("D3", "a"), ("D3", "b"), ("D4", "a"),
             ("D5", "a"), ("D5", "b"), ("D5", "c"), ("D6", "a"), ("D7", "a"), ("D7", "b")]
    skill = {"E01": 60, "E02": 35, "E03": 90, "E04": 120, "E05": 50}
    abstain_p = {"E01": 0.15, "E02": 0.0, "E03": 0.25, "E04": 0.1, "E05": 0.2}
    rows = []
    preds = []
    for expert, sd in skill.items():
        for doc, line in lines:
            if rng.random() < abstain_p[expert]:
                if rng.random() < 0.5:
                    rows.append(f"{expert},{doc},{line},,\n")
                # otherwise the line is simply missing for this expert
                continue
            centre = truth[doc] + rng.normal(0, sd)
            half = int(rng.choice([0, 12, 25, 50, 75]))
            lo, hi = int(round(centre - half)), int(round(centre + half))
            lo = lo if lo != 0 else -1
            hi = hi if hi != 0 else 1
            rows.append(f"{expert},{doc},{line},{lo},{hi}\n")
    for doc, line in lines:
        preds.append(f"{doc},{line},{(truth[doc] + rng.normal(0, 45)) / 100:.4f}\n")
    write("experts/truth.csv", "doc_id,year\n" + "".join(f"{d},{y}\n" for d, y in truth.items()))
    write("experts/responses.csv", "expert_id,doc_id,line_id,lo_year,hi_year\n" + "".join(rows))
    write("experts/model_preds.csv", "doc_id,line_id,pred_century\n" + "".join(preds))


def experiment_config():
    cfg = {
        "protocol": ["baseline", "transfer", "union"],
        "seed": 42,
        "datasets": [
            {
                "name": "pll",
                "manifest": "../pll/manifest.json",
                "split": {"train": 0.6, "val": 0.2, "test": 0.2, "unit": "document"},
            },
            {"name": "hd", "manifest": "../hd/manifest.json"},
        ],
        "predictor": {"kind": "knn", "k": 3},
        "baseline_fractions": [1.0, 0.5, 0.35, 0.1],
        "transfer_fractions": [0.0, 0.25, 0.5, 0.75, 1.0],
        "union_fractions": [1.0, 0.5, 0.35, 0.1],
        "etw": {"alpha_min": 0.0, "alpha_max": 3.0, "alpha_step": 0.5},
        "output_dir": "out",
    }
    dump_json("experiment/config.json", cfg)


def main():
    rng = np.random.default_rng(20240607)
    pll(rng)
    hd(rng)
    eval_fixture()
    experts_fixture(rng)
    experiment_config()


if __name__ == "__main__":
    main()
