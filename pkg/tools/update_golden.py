"""Regenerate tests/golden from the shipped instances.

Run after an intentional output change, then review the diff.
"""

import contextlib
import io
from pathlib import Path

from optswitch.cli import main
from optswitch.documents import shipped_instance_text, shipped_instances

GOLDEN = Path(__file__).resolve().parents[1] / "tests" / "golden"
COMMANDS = {
    "validate": ["validate"],
    "solve": ["solve"],
    "oracle": ["oracle"],
}


def capture(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(argv)
    return code, buf.getvalue()


def run():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    tmp = GOLDEN / "_instance.json"
    for name in shipped_instances():
        tmp.write_text(shipped_instance_text(name))
        for verb, argv in COMMANDS.items():
            code, out = capture(argv + [str(tmp)])
            if code != 0:
                raise SystemExit(f"{verb} {name} exited {code}")
            ext = "txt" if verb == "validate" else "json"
            (GOLDEN / f"{name}.{verb}.{ext}").write_text(out)
    tmp.unlink()


if __name__ == "__main__":
    run()
