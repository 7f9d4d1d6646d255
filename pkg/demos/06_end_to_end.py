"""The whole pipeline through the CLI entry points, file to file.

generate -> solve (preprocess, route components, merge) -> compare against
a straight exact run, all through the same JSON formats the command line
uses.
"""

import json
import tempfile
from pathlib import Path

from shapalloc.cli import main

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    scn = tmp / "scenario.json"
    solved = tmp / "solved.json"
    exact = tmp / "exact.json"
    table = tmp / "table.csv"

    main(["generate", "--agents", "18", "--coauthor-prob", "0.4", "--seed", "6",
          "--out", str(scn)])
    main(["solve", "--scenario", str(scn), "--threads", "1",
          "--out", str(solved), "--plot-csv", str(table)])
    main(["exact", "--scenario", str(scn), "--threads", "1", "--out", str(exact)])

    report = json.loads(solved.read_text())
    print("solve meta:", json.dumps(report["meta"]["preprocess"], indent=2))
    print("\nfirst rows of the plot table:")
    print("\n".join(table.read_text().splitlines()[:6]))

    print("\ncompare (solve vs exact):")
    main(["compare", "--report-a", str(solved), "--report-b", str(exact)])
