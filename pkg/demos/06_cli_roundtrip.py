# %% [markdown]
# # The command-line front end
# Equivalent to `geoflow verify --config esch.json --out run` in a shell.

# %%
import json
import pathlib

from geoflow.cli import main

cfg = {
    "scenario": {"name": "eschenburg", "parameters": {"k": 1, "l": -1, "p": 2, "q": 2}},
    "integrator": {"h": 1e-3, "T": 2.0},
    "seed": 0,
}
path = pathlib.Path("esch.json")
path.write_text(json.dumps(cfg, indent=2))

code = main(["list"])
code = main(["verify", "--config", str(path), "--out", "run"])
print("exit code:", code)
report = json.loads(pathlib.Path("run/report.json").read_text())
print("torus dimension:", report["torus_dimension"])
print({name: check["passed"] for name, check in report["checks"].items()})

# a deliberately loose rank tolerance makes every rank decision ambiguous -> exit code 2
cfg["tolerances"] = {"tol_rank": 0.1}
cfg["checks"] = ["completeness"]
path.write_text(json.dumps(cfg))
print("mis-tolerance exit code:", main(["verify", "--config", str(path), "--out", "run_loose"]))
