import os
from pathlib import Path

# share long Monte-Carlo runs with demos/run_convergence_tables.py
os.environ.setdefault(
    "STOCHFEM_CACHE_DIR", str(Path(__file__).resolve().parent.parent / ".cache")
)
