"""
Running the bundled experiment
==============================

Everything above can be driven from one JSON file.  The runner writes a
JSON report per check, plot-ready CSVs and a summary, all stamped with a
hash of the config and of the kernels used.
"""

import sys
import tempfile
from pathlib import Path

from cuspmorrey.cli import load_config, run_config

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp())
cfg = load_config("cusp-gamma-0.5.json", out=out)
status, results, paths = run_config(cfg)
print("config hash:", cfg.hash, " exit status:", status)
for r in results:
    print(f"  {'PASS' if r.passed else 'FAIL'}  {r.check_id}")
print((out / "summary.csv").read_text())
# the same run from a shell: cuspmorrey run --config cusp-gamma-0.5.json --out DIR
