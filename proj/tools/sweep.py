"""Run `empo2 train` over seeds and summarise the last 50 iterations.

usage: sweep.py OUT_ROOT "EXTRA TRAIN ARGS" 1,2,3,4,5 [--bin path/to/empo2]
"""
import argparse
import json
import pathlib
import statistics
import subprocess
from concurrent.futures import ThreadPoolExecutor


def summarise(run_dir):
    rows = [json.loads(line) for line in open(run_dir / "metrics.jsonl")]
    tail = rows[-50:]
    return {
        "eval_return": statistics.mean(r["eval_mean_return"] for r in tail),
        "eval_success": statistics.mean(r["eval_success"] for r in tail),
        "train_success": statistics.mean(r["train_success"] for r in tail),
        "entropy_150": rows[149]["entropy"] if len(rows) > 149 else None,
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_root", type=pathlib.Path)
    ap.add_argument("extra")
    ap.add_argument("seeds")
    ap.add_argument("--bin", default="build/empo2")
    ap.add_argument("--jobs", type=int, default=4)
    args = ap.parse_args()

    def run(seed):
        d = args.out_root / f"s{seed}"
        cmd = f"{args.bin} train --seed {seed} --out {d} {args.extra}"
        subprocess.run(cmd, shell=True, check=True, stdout=subprocess.DEVNULL)
        return seed, summarise(d)

    with ThreadPoolExecutor(args.jobs) as ex:
        results = list(ex.map(run, args.seeds.split(",")))
    for seed, s in results:
        print(seed, json.dumps(s))
    print("median eval_return", statistics.median(s["eval_return"] for _, s in results),
          "median eval_success", statistics.median(s["eval_success"] for _, s in results))


if __name__ == "__main__":
    main()
