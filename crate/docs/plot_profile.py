"""Plot Λ_n from `intervaldyn lyap` or `intervaldyn design run` CSV output.

    python docs/plot_profile.py profile.csv [more.csv ...]
"""
import json
import sys

import matplotlib.pyplot as plt
import pandas as pd


def load(path):
    with open(path, newline="") as fh:
        first = fh.readline()
        config = json.loads(first.removeprefix("# config ")) if first.startswith("# config") else {}
    return config, pd.read_csv(path, comment="#")


def main(paths):
    fig, ax = plt.subplots()
    for path in paths:
        _, df = load(path)
        groups = df.groupby("map") if "map" in df else [(path, df)]
        for label, part in groups:
            ax.plot(part["n"], part["lambda_n"], label=str(label))
    ax.set_xscale("log")
    ax.axhline(0.0, color="grey", lw=0.5)
    ax.set_xlabel("n")
    ax.set_ylabel("Λ_n")
    ax.legend()
    plt.show()


if __name__ == "__main__":
    main(sys.argv[1:])
