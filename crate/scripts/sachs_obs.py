"""Build the observational protein-signalling fixture: the first 853 rows
of the combined recording, raw abundances, columns renamed to the benchmark
network's names, plus its 20-edge ground truth.

usage: python scripts/sachs_obs.py <cyto_full_data.csv> <out-dir>
"""
import pathlib
import sys

import pandas as pd

RENAME = {
    "praf": "Raf",
    "pmek": "Mek",
    "plcg": "Plcg",
    "p44/42": "Erk",
    "pakts473": "Akt",
    "pjnk": "Jnk",
}

# 17 benchmark-network edges plus PIP2->PKC, Plcg->PKC, PIP3->Akt
EDGES = [
    ("Erk", "Akt"), ("PKA", "Akt"), ("Mek", "Erk"), ("PKA", "Erk"),
    ("PKA", "Jnk"), ("PKC", "Jnk"), ("PKA", "Mek"), ("PKC", "Mek"),
    ("Raf", "Mek"), ("PKA", "P38"), ("PKC", "P38"), ("PIP3", "PIP2"),
    ("Plcg", "PIP2"), ("Plcg", "PIP3"), ("PKC", "PKA"), ("PKA", "Raf"),
    ("PKC", "Raf"), ("PIP2", "PKC"), ("Plcg", "PKC"), ("PIP3", "Akt"),
]


def main():
    src, out = sys.argv[1], pathlib.Path(sys.argv[2])
    df = pd.read_csv(src).iloc[:853].rename(columns=RENAME)
    df.to_csv(out / "sachs_obs.csv", index=False, float_format="%.6f")
    with open(out / "sachs_obs.edges", "w") as f:
        for a, b in sorted(EDGES):
            f.write(f"{a} {b}\n")
    print(df.shape, len(EDGES))


if __name__ == "__main__":
    main()
