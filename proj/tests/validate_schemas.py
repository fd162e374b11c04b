"""Runs the CLI over configs/ and validates configs and every emitted JSON file
against schema/*.schema.json.

usage: validate_schemas.py <folharm binary> <repo root> <scratch dir>
"""
import json
import pathlib
import shutil
import subprocess
import sys

import jsonschema

binary, root, scratch = sys.argv[1], pathlib.Path(sys.argv[2]), pathlib.Path(sys.argv[3])
schemas = {p.name.removesuffix(".schema.json"): json.loads(p.read_text()) for p in (root / "schema").glob("*.schema.json")}
failures = []


def validate(doc, name, where):
    try:
        jsonschema.validate(doc, schemas[name], cls=jsonschema.Draft202012Validator)
    except jsonschema.ValidationError as e:
        failures.append(f"{where}: {e.message} at {list(e.absolute_path)}")


def commands_for(config, cfg_name):
    if "report" in cfg_name:
        return ["report"]
    cmds = ["tension", "energy"]
    if "flow" in config or "rigidity" in config:
        cmds.append("flow")
    if "verify" in config:
        cmds.append("verify")
    return cmds


shutil.rmtree(scratch, ignore_errors=True)
seen = set()
for cfg in sorted((root / "configs").glob("*.json")):
    config = json.loads(cfg.read_text())
    validate(config, "config", cfg.name)
    for cmd in commands_for(config, cfg.stem):
        out = scratch / f"{cfg.stem}_{cmd}"
        proc = subprocess.run([binary, cmd, "--config", str(cfg), "--out", str(out)], capture_output=True, text=True)
        if proc.returncode != 0:
            failures.append(f"{cfg.name} {cmd}: exit {proc.returncode}: {proc.stderr.strip()}")
            continue
        for produced in out.rglob("*.json"):
            kind = "report" if produced.parent.name == "reports" else produced.stem
            validate(json.loads(produced.read_text()), kind, str(produced.relative_to(scratch)))
            seen.add(kind)

missing = {"report", "diagnostics", "flow", "energy", "tension", "geometry_report"} - seen
if missing:
    failures.append(f"no output exercised schema(s): {sorted(missing)}")

# The config schema must reject what the parser rejects.
bad = [
    {"source": {"kind": "flat_torus", "periods": [1]}, "colour": 1},
    {"source": {"kind": "flat_torus", "perods": [1]}},
    {"source": {"kind": "round_sphere", "periods": [1]}},
    {"source": {"kind": "flat_torus", "periods": [1]}, "verify": [{"name": "lemma-volume", "mode": "general"}]},
    {"source": {"kind": "flat_torus", "periods": [1]}, "verify": [{"name": "first-variation"}]},
    {"source": {"kind": "flat_torus", "periods": [1]}, "map": {"family": "sine_perturbation"}},
    {"source": {"kind": "flat_torus", "periods": ["2 pi"]}},
]
for i, doc in enumerate(bad):
    if jsonschema.Draft202012Validator(schemas["config"]).is_valid(doc):
        failures.append(f"config schema accepted bad document #{i}")
    path = scratch / f"bad_{i}.json"
    path.write_text(json.dumps(doc))
    proc = subprocess.run([binary, "energy", "--config", str(path), "--out", str(scratch / "bad")], capture_output=True)
    if proc.returncode != 2:
        failures.append(f"CLI exit {proc.returncode} (expected 2) for bad document #{i}")

for f in failures:
    print("FAIL", f)
print(f"validated {len(seen)} output kinds over {len(list((root / 'configs').glob('*.json')))} configs")
sys.exit(1 if failures else 0)
