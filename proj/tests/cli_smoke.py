#!/usr/bin/env python3
"""Exit codes and the serve/session/party flow of the psival binary."""

import csv
import json
import os
import pathlib
import socket
import subprocess
import sys
import tempfile
import time

BIN, WINE = sys.argv[1], sys.argv[2]
failures = []


def run(*args, **kw):
    return subprocess.run([BIN, *args], capture_output=True, text=True, timeout=120, **kw)


def expect(name, proc, code):
    if proc.returncode != code:
        failures.append(f"{name}: exit {proc.returncode}, wanted {code}\n{proc.stderr}")


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


with tempfile.TemporaryDirectory() as tmp:
    tmp = pathlib.Path(tmp)
    key = tmp / "key.hex"
    key.write_text(os.urandom(32).hex() + "\n")
    base = ["run", "--dataset", WINE, "--id-col", "id", "--label-col", "class", "--parties", "3",
            "--bins", "5", "--permutations", "20", "--seed", "42", "--key-file", str(key)]

    p = run(*base, "--out", str(tmp / "a"), "--expect-shape", "178x14")
    expect("run", p, 0)
    run(*base, "--out", str(tmp / "b"))
    if (tmp / "a" / "comparison.json").read_bytes() != (tmp / "b" / "comparison.json").read_bytes():
        failures.append("reruns differ")
    report = json.loads((tmp / "a" / "comparison.json").read_text())
    if len(report["rows"]) != 13 or abs(report["totals"]["normalized_share"] - 1) > 1e-9:
        failures.append("unexpected report contents")

    expect("tolerance breach", run(*base, "--out", str(tmp / "c"), "--tolerance", "-1"), 1)
    expect("no key", run(*base[:-2], "--out", str(tmp / "d")), 2)
    short = tmp / "short.hex"
    short.write_text("00112233")
    expect("short key", run(*base[:-1], str(short), "--out", str(tmp / "d")), 2)
    expect("bad shape", run(*base, "--out", str(tmp / "d"), "--expect-shape", "10x2"), 2)
    expect("too many parties", run(*[a if a != "3" else "20" for a in base], "--out", str(tmp / "d")), 2)
    expect("unknown flag", run("run", "--bogus"), 2)
    expect("oracle", run("oracle", "--dataset", WINE, "--out", str(tmp / "o")), 0)
    if not (tmp / "o" / "oracle.json").exists():
        failures.append("oracle.json missing")

    # Two parties as separate processes against a served coordinator.
    rows = list(csv.reader(open(WINE)))
    header, body = rows[0], rows[1:]
    with open(tmp / "p1.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", header[1], header[2], "class"])
        w.writerows([r[0], r[1], r[2], r[-1]] for r in body)
    with open(tmp / "p2.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", header[3]])
        w.writerows([r[0], r[3]] for r in body[::2])

    port = free_port()
    url = f"http://127.0.0.1:{port}"
    server = subprocess.Popen([BIN, "serve", "--host", "127.0.0.1", "--port", str(port)],
                              stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    try:
        sid = None
        for _ in range(100):
            s = run("session", "--server", url, "--parties", "2", "--permutations", "4", "--seed", "3")
            if s.returncode == 0:
                sid = s.stdout.strip()
                break
            time.sleep(0.05)
        if not sid:
            failures.append("could not create a session")
        else:
            common = ["--server", url, "--session", sid, "--key-file", str(key), "--bins", "4"]
            a = subprocess.Popen([BIN, "party", "--csv", str(tmp / "p1.csv"), "--party-id", "p1",
                                  "--label-col", "class", "--out", str(tmp / "v1"), *common],
                                 stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
            b = run("party", "--csv", str(tmp / "p2.csv"), "--party-id", "p2", "--out", str(tmp / "v2"), *common)
            a.wait(timeout=120)
            expect("party p2", b, 0)
            if a.returncode != 0:
                failures.append(f"party p1 exit {a.returncode}: {a.stderr.read()}")
            v1 = json.loads((tmp / "v1" / "valuation.json").read_text())
            if v1["common_id_count"] != 89:
                failures.append(f"common ids {v1['common_id_count']}, wanted 89")
            again = run("party", "--csv", str(tmp / "p2.csv"), "--party-id", "p2", *common)
            expect("duplicate party run", again, 3)
    finally:
        server.terminate()
        server.wait(timeout=10)

    expect("unreachable", run("session", "--server", "http://127.0.0.1:1"), 3)

for f in failures:
    print("FAIL", f)
print("cli smoke:", "ok" if not failures else f"{len(failures)} failures")
sys.exit(1 if failures else 0)
