"""The command-line pipeline, driven from Python.

Each call below is what ``arxthermal <command> ...`` does in a shell. It
generates a bench record, fits a model, replays it and gates it on a fit
threshold.
"""
# %%
import json
import tempfile
from pathlib import Path

from arxthermal.cli import main

work = Path(tempfile.mkdtemp(prefix="arxthermal-"))
print("working in", work)

# %%
assert main(["gen", "--seed", "1", "--noise-fraction", "0.02", "--out-dir", str(work)]) == 0
print((work / "train.csv").read_text().splitlines()[:3])

# %%
code = main(["fit", "--train", str(work / "train.csv"), "--validate", str(work / "validate.csv"),
             "--na-max", "3", "--nb-max", "3", "--nk-max", "1", "--out-dir", str(work / "fit")])
report = json.loads((work / "fit" / "report.json").read_text())
print("exit", code, "validation fit", round(report["validation"]["fit_percent"], 2))

# %%
main(["simulate", "--model", str(work / "fit" / "model.json"), "--data", str(work / "validate.csv"),
      "--add-ambient", "--out", str(work / "prediction.csv")])
print((work / "prediction.csv").read_text().splitlines()[:3])

# %%
# exit 0 when the fit clears the bar, 1 when it does not
for bar in ("80", "99.9"):
    code = main(["validate", "--model", str(work / "fit" / "model.json"),
                 "--data", str(work / "validate.csv"), "--fit-threshold", bar])
    print("threshold", bar, "-> exit", code)
