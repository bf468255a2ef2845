"""Write VTK files of a few sampled realisations of both problems.

Each surface realisation is exported on the deformed geometry (vertices
displaced along the radial direction by the sampled height field) with the
path-wise FEM solution as vertex data; the coupled problem additionally
writes the deformed boundary curve with the surface component.  Output
lands in out/realisations/ and opens directly in ParaView.
"""
import sys
from pathlib import Path

from stochfem.cli import RunConfig, export_realisations
from stochfem.random_field import Problem

OUT = Path(__file__).resolve().parent.parent / "out" / "realisations"


def config(problem, level, eps_tol):
    return RunConfig(
        problem=problem, norm="l2", levels=(level, level), m_schedule=None,
        seed=42, alpha=1.0, beta=1.0, eps_tol=eps_tol, sigma_tol=0.3,
        delta=0.4, out_dir=OUT / problem.value, export_samples=0, repeat=1,
        threads=1,
    )


def main():
    for problem, level, eps in (
        (Problem.SURFACE, 4, 0.1),
        (Problem.BULK_SURFACE, 4, 0.02),
    ):
        for path in export_realisations(config(problem, level, eps), 3):
            print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
