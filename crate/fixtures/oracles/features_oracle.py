"""Straight-loop reference for the zoning features of every fixture image.

Otsu's threshold is found by brute force with exact rational arithmetic:
for each candidate t the pixels are split into dark (<= t) and light (> t)
and the between-class variance w_d * w_l * (m_d - m_l)^2 is compared. The
first maximum wins. Writes ../hd/features_oracle.csv with 17 significant
digits.
"""

import csv
import math
import os
from fractions import Fraction

HERE = os.path.dirname(os.path.abspath(__file__))
HD = os.path.join(HERE, "..", "hd")
ZONES = 4


def read_pgm(path):
    data = open(path, "rb").read()
    tokens, pos = [], 2
    while len(tokens) < 3:
        c = data[pos : pos + 1]
        if c == b"#":
            pos = data.index(b"\n", pos)
        elif c.isspace():
            pos += 1
        else:
            start = pos
            while data[pos : pos + 1].isdigit():
                pos += 1
            tokens.append(int(data[start:pos]))
    w, h, _ = tokens
    raster = data[pos + 1 : pos + 1 + w * h]
    return w, h, [[raster[y * w + x] for x in range(w)] for y in range(h)]


def otsu(pixels):
    if len(set(pixels)) < 2:
        return 127
    best, best_t = None, 127
    for t in range(255):
        dark = [p for p in pixels if p <= t]
        light = [p for p in pixels if p > t]
        if not dark or not light:
            continue
        md = Fraction(sum(dark), len(dark))
        ml = Fraction(sum(light), len(light))
        between = len(dark) * len(light) * (md - ml) ** 2
        if best is None or between > best:
            best, best_t = between, t
    return best_t


def bounds(n):
    base = n // ZONES
    return [(i * base, n if i == ZONES - 1 else (i + 1) * base) for i in range(ZONES)]


def features(w, h, img):
    flat = [p for row in img for p in row]
    t = otsu(flat)
    out = []
    for y0, y1 in bounds(h):
        for x0, x1 in bounds(w):
            area = (y1 - y0) * (x1 - x0)
            ink = 0
            for y in range(y0, y1):
                for x in range(x0, x1):
                    if img[y][x] <= t:
                        ink += 1
            out.append(ink / area if area else 0.0)
    n = len(flat)
    out.append(sum(1 for p in flat if p <= t) / n)
    mean = sum(flat) / n
    var = sum((p - mean) ** 2 for p in flat) / n
    out.append(math.sqrt(var) / 255.0)
    return t, out


def main():
    names = sorted(os.listdir(os.path.join(HD, "images")))
    with open(os.path.join(HD, "features_oracle.csv"), "w", newline="\n") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["image", "threshold"] + [f"f{k}" for k in range(ZONES * ZONES + 2)])
        for name in names:
            w, h, img = read_pgm(os.path.join(HD, "images", name))
            t, f = features(w, h, img)
            wr.writerow([name, t] + [repr(v) for v in f])


if __name__ == "__main__":
    main()
