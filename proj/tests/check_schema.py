"""Validate every shipped config against docs/config.schema.json."""
import json
import pathlib
import sys

try:
    import jsonschema
except ImportError:
    print("jsonschema not installed")
    sys.exit(77)

root = pathlib.Path(sys.argv[1])
schema = json.loads((root / "docs" / "config.schema.json").read_text())
validator = jsonschema.Draft202012Validator(schema)
failed = 0
for path in sorted((root / "configs").glob("*.json")):
    errors = list(validator.iter_errors(json.loads(path.read_text())))
    for e in errors:
        print(f"{path.name}: {e.message}")
    failed += bool(errors)
    print(f"{path.name}: {'ok' if not errors else 'invalid'}")
sys.exit(1 if failed else 0)
