#!/usr/bin/env python3
"""Validate JSON artifacts against the schemas in docs/schemas.

usage: validate_json.py SCHEMA_DIR SCHEMA_NAME FILE [SCHEMA_NAME FILE ...]
"""
import json
import pathlib
import sys

import jsonschema
from referencing import Registry, Resource


def main(argv):
    if len(argv) < 4 or len(argv) % 2 != 0:
        print(__doc__, file=sys.stderr)
        return 2
    schema_dir = pathlib.Path(argv[1])
    resources = []
    for path in sorted(schema_dir.glob("*.schema.json")):
        resources.append((path.name, Resource.from_contents(json.loads(path.read_text()))))
    registry = Registry().with_resources(resources)
    failed = False
    for name, target in zip(argv[2::2], argv[3::2]):
        schema = registry.contents(f"{name}.schema.json")
        validator = jsonschema.Draft202012Validator(schema, registry=registry)
        errors = sorted(validator.iter_errors(json.loads(pathlib.Path(target).read_text())), key=str)
        for error in errors:
            failed = True
            print(f"{target}: {'/'.join(map(str, error.absolute_path))}: {error.message}")
        if not errors:
            print(f"{target}: valid {name}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
