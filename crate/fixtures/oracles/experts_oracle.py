"""Independent reference values for the expert fixture.

Computes per-expert MAE with and without abstentions, the mean pairwise
indices and Fleiss' kappa over 25-year bins using numpy, scipy and
statsmodels. Writes ../experts/oracle.json.

Rules encoded here:
  * an answer becomes a point by its midpoint; errors are in centuries
  * the roster is every line any expert mentioned; a line an expert never
    mentioned counts as an abstention
  * an abstention is replaced by the largest error any expert made on that
    line, or the largest error overall when nobody answered it
  * pairwise indices use the lines both experts answered; pairs whose index
    is undefined are skipped
  * kappa items are (line, bin) pairs on the tightest 25-year-aligned grid
    covering all answers and truths; a bin is 1 when the answer overlaps it
    over a positive length, or contains it for a single-year answer
"""

import csv
import itertools
import json
import math
import os

import numpy as np
from scipy.stats import pearsonr, spearmanr
from statsmodels.stats.inter_rater import fleiss_kappa

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "..", "experts")
STEP = 25


def load():
    with open(os.path.join(DATA, "truth.csv")) as fh:
        truth = {r["doc_id"]: int(r["year"]) for r in csv.DictReader(fh)}
    answers = {}
    with open(os.path.join(DATA, "responses.csv")) as fh:
        for r in csv.DictReader(fh):
            key = (r["doc_id"], r["line_id"])
            a = None if r["lo_year"] == "" else (int(r["lo_year"]), int(r["hi_year"]))
            answers.setdefault(r["expert_id"], {})[key] = a
    return truth, answers


def main():
    truth, answers = load()
    experts = sorted(answers)
    roster = sorted({k for e in experts for k in answers[e]})

    points = {e: {} for e in experts}
    for e in experts:
        for k in roster:
            a = answers[e].get(k)
            if a is not None:
                points[e][k] = (a[0] + a[1]) / 2.0 / 100.0

    err = {e: {k: abs(v - truth[k[0]] / 100.0) for k, v in points[e].items()} for e in experts}
    global_max = max(v for e in experts for v in err[e].values())
    subst = {}
    for k in roster:
        seen = [err[e][k] for e in experts if k in err[e]]
        subst[k] = max(seen) if seen else global_max

    table = []
    for e in experts:
        answered = [err[e][k] for k in roster if k in err[e]]
        empty = [subst[k] for k in roster if k not in err[e]]
        table.append(
            {
                "expert_id": e,
                "mae_incl": float(np.mean(answered + empty)),
                "mae_excl": float(np.mean(answered)),
                "n_empty": len(empty),
            }
        )

    maes, sps, prs = [], [], []
    for a, b in itertools.combinations(experts, 2):
        common = [k for k in roster if k in points[a] and k in points[b]]
        xa = np.array([points[a][k] for k in common])
        xb = np.array([points[b][k] for k in common])
        if len(common) >= 1:
            maes.append(float(np.mean(np.abs(xa - xb)) * 100.0))
        if len(common) >= 2 and np.std(xa) > 0 and np.std(xb) > 0:
            sps.append(float(spearmanr(xa, xb).statistic))
            prs.append(float(pearsonr(xa, xb).statistic))

    years = [y for e in experts for a in answers[e].values() if a for y in a]
    years += [truth[d] for d in {k[0] for k in roster}]
    origin = math.floor(min(years) / STEP) * STEP
    end = math.ceil(max(years) / STEP) * STEP
    n_bins = max(1, (end - origin) // STEP)

    def bits(a):
        out = []
        for b in range(n_bins):
            bl, bh = origin + b * STEP, origin + (b + 1) * STEP
            if a is None:
                out.append(0)
            elif a[0] == a[1]:
                out.append(int(bl <= a[0] <= bh))
            else:
                out.append(int(a[0] < bh and a[1] > bl))
        return out

    counts = []
    per = {e: {k: bits(answers[e].get(k)) for k in roster} for e in experts}
    for k in roster:
        for b in range(n_bins):
            ones = sum(per[e][k][b] for e in experts)
            counts.append([len(experts) - ones, ones])
    kappa = float(fleiss_kappa(np.array(counts), method="fleiss"))

    out = {
        "experts": table,
        "mean_pairwise_mae": float(np.mean(maes)),
        "mean_pairwise_spearman": float(np.mean(sps)),
        "mean_pairwise_pearson": float(np.mean(prs)),
        "fleiss_kappa": kappa,
        "n_items": len(counts),
        "grid": {"origin": origin, "step": STEP, "n_bins": n_bins},
    }
    with open(os.path.join(DATA, "oracle.json"), "w", newline="\n") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")


if __name__ == "__main__":
    main()
