"""Time the enumeration kernels with numba and with the interpreted fallback.

Each path runs in its own interpreter because the backend is chosen at import.
Usage: python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, time
from loopgas import _kernels
from loopgas.expansion import cycle_space_partition_function, hardcore_sum
from loopgas.polymer import enumerate_family

def timed(fn, repeat):
    fn()  # warm-up (includes compilation on the numba path)
    best = min(_once(fn) for _ in range(repeat))
    return best

def _once(fn):
    t = time.perf_counter(); fn(); return time.perf_counter() - t

repeat = {repeat}
out = {{"numba": _kernels.NUMBA_ENABLED}}
out["enumerate_family(2,0,0,interior)"] = timed(lambda: enumerate_family(2, 0, 0, "interior"), repeat)
fam = enumerate_family(2, 1, 0, "bulk")
out["hardcore_sum(2,1,0,bulk)"] = timed(lambda: hardcore_sum(fam), repeat)
out["cycle_space_partition_function(2,0)"] = timed(lambda: cycle_space_partition_function(2, 0), repeat)
print(json.dumps(out))
"""


def run(pure: bool, repeat: int) -> dict:
    env = dict(os.environ)
    if pure:
        env["LOOPGAS_PURE_PYTHON"] = "1"
    else:
        env.pop("LOOPGAS_PURE_PYTHON", None)
    res = subprocess.run([sys.executable, "-c", WORKLOAD.format(repeat=repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    fast, slow = run(False, args.repeat), run(True, args.repeat)
    print(f"{'workload':42s} {'numba s':>10s} {'python s':>10s} {'speed-up':>9s}")
    for key in fast:
        if key == "numba":
            continue
        print(f"{key:42s} {fast[key]:10.4f} {slow[key]:10.4f} {slow[key] / fast[key]:9.1f}")
    if not fast["numba"]:
        print("numba unavailable: both columns used the interpreted path")


if __name__ == "__main__":
    main()
