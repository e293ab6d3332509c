#!/usr/bin/env python3
"""Rebuild the a9a binary classification set from raw UCI Adult files.

a9a is the 123-feature binarization of Adult: six continuous attributes are
quantized (five quantile bins, or zero/non-zero for capital gain and loss) and
eight categorical attributes are one-hot encoded in the order listed in
adult.names. Missing values ("?") leave their group empty.

Usage: make_a9a.py adult.data adult.test OUT_TRAIN OUT_TEST
"""
import sys

WORKCLASS = "Private, Self-emp-not-inc, Self-emp-inc, Federal-gov, Local-gov, State-gov, Without-pay, Never-worked"
EDUCATION = ("Bachelors, Some-college, 11th, HS-grad, Prof-school, Assoc-acdm, Assoc-voc, 9th, 7th-8th, "
             "12th, Masters, 1st-4th, 10th, Doctorate, 5th-6th, Preschool")
MARITAL = ("Married-civ-spouse, Divorced, Never-married, Separated, Widowed, Married-spouse-absent, "
           "Married-AF-spouse")
OCCUPATION = ("Tech-support, Craft-repair, Other-service, Sales, Exec-managerial, Prof-specialty, "
              "Handlers-cleaners, Machine-op-inspct, Adm-clerical, Farming-fishing, Transport-moving, "
              "Priv-house-serv, Protective-serv, Armed-Forces")
RELATIONSHIP = "Wife, Own-child, Husband, Not-in-family, Other-relative, Unmarried"
RACE = "White, Asian-Pac-Islander, Amer-Indian-Eskimo, Other, Black"
SEX = "Female, Male"
COUNTRY = ("United-States, Cambodia, England, Puerto-Rico, Canada, Germany, Outlying-US(Guam-USVI-etc), "
           "India, Japan, Greece, South, China, Cuba, Iran, Honduras, Philippines, Italy, Poland, Jamaica, "
           "Vietnam, Mexico, Portugal, Ireland, France, Dominican-Republic, Laos, Ecuador, Taiwan, Haiti, "
           "Columbia, Hungary, Guatemala, Nicaragua, Scotland, Thailand, Yugoslavia, El-Salvador, "
           "Trinadad&Tobago, Peru, Hong, Holand-Netherlands")


def values(spec):
    return [v.strip() for v in spec.split(",")]


# (column, kind, payload): kind "q" = quantile bins, "z" = zero/non-zero, "c" = categorical
LAYOUT = [
    (0, "q", 5), (1, "c", values(WORKCLASS)), (2, "q", 5), (3, "c", values(EDUCATION)),
    (4, "q", 5), (5, "c", values(MARITAL)), (6, "c", values(OCCUPATION)),
    (7, "c", values(RELATIONSHIP)), (8, "c", values(RACE)), (9, "c", values(SEX)),
    (10, "z", 2), (11, "z", 2), (12, "q", 5), (13, "c", values(COUNTRY)),
]


def read(path):
    rows = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("|"):
                continue
            cols = [c.strip() for c in line.split(",")]
            if len(cols) != 15:
                continue
            rows.append(cols)
    return rows


def cut_points(rows, col, bins):
    xs = sorted(float(r[col]) for r in rows)
    return [xs[(len(xs) * q) // bins] for q in range(1, bins)]


def encode(rows, cuts):
    out = []
    for r in rows:
        label = "+1" if r[14].startswith(">50K") else "-1"
        feats = []
        base = 1
        for col, kind, payload in LAYOUT:
            v = r[col]
            if kind == "c":
                if v in payload:
                    feats.append(base + payload.index(v))
                base += len(payload)
            elif kind == "z":
                feats.append(base + (0 if float(v) == 0.0 else 1))
                base += 2
            else:
                x = float(v)
                b = sum(1 for c in cuts[col] if x >= c)
                feats.append(base + b)
                base += payload
        assert base == 124
        out.append(label + " " + " ".join(f"{i}:1" for i in feats))
    return out


def main():
    if len(sys.argv) != 5:
        sys.exit(__doc__)
    train, test = read(sys.argv[1]), read(sys.argv[2])
    cuts = {col: cut_points(train, col, n) for col, kind, n in LAYOUT if kind == "q"}
    for rows, path in ((train, sys.argv[3]), (test, sys.argv[4])):
        with open(path, "w") as f:
            f.write("\n".join(encode(rows, cuts)) + "\n")


if __name__ == "__main__":
    main()
