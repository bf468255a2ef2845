"""Reproduce the four Monte-Carlo convergence tables.

Runs the surface problem (icosphere levels 3-6) and the coupled
bulk-surface problem (disk levels 2-5) in both the L2 and H1 norms, with
the sample counts paired to the mesh levels so that the Monte-Carlo and
discretisation errors are balanced.  Statistics are persisted under
.cache/ next to the repository root, so reruns (and the test suite) reuse
them.  The finest rows average 4096 samples; expect a few hours on a
single core for a cold cache.
"""
import os
import sys
import time

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
os.environ.setdefault("STOCHFEM_CACHE_DIR", os.path.join(ROOT, ".cache"))

from stochfem.cli import render_console
from stochfem.experiments import Schedule, auto_m_schedule, run_convergence
from stochfem.random_field import Problem

SEED = 42
LEVELS = {Problem.SURFACE: (3, 4, 5, 6), Problem.BULK_SURFACE: (2, 3, 4, 5)}


def main():
    for problem in (Problem.BULK_SURFACE, Problem.SURFACE):
        levels = LEVELS[problem]
        for norm in ("l2", "h1"):
            entries = tuple(zip(levels, auto_m_schedule(levels, norm)))
            schedule = Schedule(problem, entries, SEED, norm=norm)
            t0 = time.time()
            table = run_convergence(schedule)
            print(f"# {problem.value}, {norm} ({time.time() - t0:.1f} s)")
            print(render_console(table))
            print(flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
