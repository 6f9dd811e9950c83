#!/usr/bin/env python3
"""Dump the service's published request/response JSON schemas to a file.

The console's contract tests validate UI-built payloads against this frozen
copy; regenerate whenever the service schemas change.
"""

import json
import sys

from vectorlens.service import REQUEST_SCHEMAS, RESPONSE_SCHEMAS


def main() -> None:
    out_path = sys.argv[1] if len(sys.argv) > 1 else "schema.json"
    payload = {
        "requests": {name: model.model_json_schema() for name, model in REQUEST_SCHEMAS.items()},
        "responses": {name: model.model_json_schema() for name, model in RESPONSE_SCHEMAS.items()},
    }
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out_path}")


if __name__ == "__main__":
    main()
