"""One server subprocess, started through the CLI, for the whole session."""
import re
import subprocess
import sys

import pytest


@pytest.fixture(scope="session")
def server_address():
    proc = subprocess.Popen(
        [sys.executable, "-m", "coopmarl.cli", "serve", "--port", "0"],
        stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True)
    try:
        line = proc.stdout.readline()
        match = re.search(r"serving environments on ([\w.\-]+):(\d+)", line)
        if match is None:
            raise RuntimeError(f"server did not announce its address: {line!r}")
        yield match.group(1), int(match.group(2))
    finally:
        proc.terminate()
        try:
            proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()
