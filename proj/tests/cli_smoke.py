"""End-to-end checks of the bbci command line on the bundled project files."""

import json
import os
import subprocess
import sys
import tempfile

BIN, DATA = sys.argv[1], sys.argv[2]
RUNNING = os.path.join(DATA, "running_example.json")
HIRZEBRUCH = os.path.join(DATA, "hirzebruch.json")
failures = []


def run(*args, env=None):
    p = subprocess.run([BIN, *args], capture_output=True, text=True, env=env)
    return p.returncode, p.stdout, p.stderr


def report(*args):
    code, out, err = run(*args)
    if code != 0:
        failures.append(f"{' '.join(args)}: exit {code}: {err.strip()}")
        return {}
    return json.loads(out)


def check(cond, what):
    if not cond:
        failures.append(what)


d = report("nef", "dualize", "-i", RUNNING)
check(d.get("dual", {}).get("summands") == [[[-1, 0, 0], [0, 0, 1], [1, 0, 0]], [[0, -1, 0], [0, 0, -1], [0, 1, 0]]],
      "nef dualize: nabla_1, nabla_2")
check(d.get("report", {}).get("ok") is True, "nef dualize: duality report")

g = report("nef", "regroup", "--blocks", "1,2", "-i", RUNNING)
octahedron = sorted([[s * (i == k) for k in range(3)] for i in range(3) for s in (1, -1)])
check(g.get("consistent") is True and len(g["cogrouped"]["summands"]) == 1, "nef regroup: one cogrouped summand")
check(sorted(g.get("cogrouped", {}).get("summands", [[]])[0]) == octahedron, "nef regroup: cogrouped is the octahedron")

with tempfile.TemporaryDirectory() as tmp:
    bad = os.path.join(tmp, "bad.json")
    with open(bad, "w") as f:
        json.dump({"rank": 3, "summands": [[[1, 0, 0], [1, 0, 1], [-1, 0, 1], [-1, 0, 0]],
                                           [[0, 1, 0], [0, 1, 1], [0, -1, 1], [0, -1, 0]]]}, f)
    code, out, _ = run("nef", "check", "-i", bad)
    check(code == 2 and json.loads(out)["valid"] is False, "nef check on a corrupted partition exits 2 with a report")
    broken = os.path.join(tmp, "broken.json")
    with open(broken, "w") as f:
        f.write('{"rank": 3, "summands": [')
    check(run("nef", "check", "-i", broken)[0] == 1, "malformed JSON exits 1")
    signs = os.path.join(tmp, "signs.json")
    with open(RUNNING) as f:
        p = json.load(f)
    p["coefficients"] = {"c": {"1,0,0,0": "1"}}
    with open(signs, "w") as f:
        json.dump(p, f)
    check(run("tailor", "report", "-i", signs)[0] == 2, "sign convention violation exits 2")

    code, out, _ = run("trop", "bounded", "-i", RUNNING, "-o", tmp)
    check(code == 0, "trop bounded with an output directory")
    with open(os.path.join(tmp, "trop-bounded.obj")) as f:
        obj = f.read().split("\n")
    check(sum(r.startswith("v ") for r in obj) == 8 and sum(r.startswith("l ") for r in obj) == 8,
          "trop bounded OBJ has 8 vertices and 8 edges")

b = report("trop", "bounded", "-i", RUNNING)
check(b.get("cells_by_dim", [])[:2] == [8, 8] and b.get("betti") == [1, 1], "trop bounded: 8 vertices, 8 edges, (1,1)")
check(report("trop", "unbounded", "-i", RUNNING).get("count") == 8, "trop unbounded: 8 cells")

c = report("skeleton", "charts", "-i", RUNNING)
check(len(c.get("charts", [])) == 16 and c.get("minimal") == 8 and c.get("maximal") == 8, "skeleton charts: 8 + 8")
m = report("skeleton", "member", "--u", "1,1,0", "--theta", "0,0,0.7", "-i", RUNNING)
check(m.get("in_skeleton") is True and m.get("witness") == [[1, 0, 0], [0, 1, 0]], "skeleton member: accepted")
check(report("skeleton", "member", "--u", "0,0,0", "--theta", "0,0,0", "-i", RUNNING).get("in_skeleton") is False,
      "skeleton member: origin rejected")

check(report("potential", "check", "--quadratic", "-i", RUNNING).get("adapted") is True, "potential check: adapted")
r = report("tailor", "report", "--beta", "20,50,100", "-i", RUNNING)
check(-1.3 <= r.get("slope", 0) <= -0.7, "tailor report: rate exponent near -1")
dfx = report("tailor", "defects", "--beta", "100", "-i", RUNNING)
check(dfx.get("rows", [{}])[0].get("max_ratio", 1) <= 1e-4, "tailor defects: small ratio at beta 100")

s = report("smooth", "diagnose", "-i", HIRZEBRUCH)
check(s.get("pass") is True, "smooth diagnose on the Hirzebruch fan")

first = run("tailor", "boundary", "--beta", "20,50", "--samples", "20", "-i", RUNNING)
env = dict(os.environ, BBCI_THREADS="3")
second = run("tailor", "boundary", "--beta", "20,50", "--samples", "20", "-i", RUNNING, env=env)
check(first == second, "tailor boundary is byte-identical across runs and thread counts")

for f in failures:
    print("FAIL", f)
print(f"{len(failures)} failures")
sys.exit(1 if failures else 0)
