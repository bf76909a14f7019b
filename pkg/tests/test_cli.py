import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsnet import config
from qsnet.cli import main, parse_sweep
from qsnet.config import SchemaError

GHZ_SUM = """
mu = {mu}

[network]
sensor = "qubits"
count = 2
n_max = 1
fixed = true

[probe]
family = "GHZ"
n = 1

[task]
kind = "SingleFunction"
v = [0.7071067811865476, 0.7071067811865476]

[output]
stem = "ghz"
"""

UNS_IMAGING = """
[network]
sensor = "mode"
count = 2
n_max = {N}
references = 1

[probe]
family = "UNS"
N = {N}

[task]
kind = "EstimatePhi"

[output]
stem = "uns"
"""

SINGULAR = """
[network]
sensor = "qubits"
count = 2
n_max = 1
fixed = true

[probe]
family = "GHZ"
n = 1

[task]
kind = "EstimatePhi"
W = [0.5, 0.5]

[output]
stem = "singular"
"""


def write(tmp_path, text, name="s.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def value(path, quantity):
    return float(next(r["value"] for r in rows(path) if r["quantity"] == quantity))


class TestRun:
    @pytest.mark.parametrize("mu", [1, 2])
    def test_ghz_sum(self, tmp_path, mu):
        code = main(["--out", str(tmp_path), "run", write(tmp_path, GHZ_SUM.format(mu=mu))])
        assert code == 0
        assert value(tmp_path / "ghz.csv", "pipeline_crb") == pytest.approx(0.5 / mu, abs=1e-12)
        assert value(tmp_path / "ghz.csv", "ghz_sum") == pytest.approx(0.5 / mu)
        report = json.loads((tmp_path / "ghz.json").read_text())
        assert report["kept_indices"] == [0] and report["discarded_indices"] == [1]

    @pytest.mark.parametrize("N", [1, 3])
    def test_uns_imaging(self, tmp_path, N):
        assert main(["--out", str(tmp_path), "run", write(tmp_path, UNS_IMAGING.format(N=N))]) == 0
        want = 9 / (8 * N * N)
        assert value(tmp_path / "uns.csv", "pipeline_crb") == pytest.approx(want, abs=1e-12)
        assert value(tmp_path / "uns.csv", "imaging_symmetric") == pytest.approx(want, abs=1e-12)

    def test_singular_exits_3(self, tmp_path, capsys):
        assert main(["--out", str(tmp_path), "run", write(tmp_path, SINGULAR)]) == 3
        assert "singular" in capsys.readouterr().err
        report = json.loads((tmp_path / "singular.json").read_text())
        assert report["estimation_failed"] is True
        assert "crb" not in report

    def test_capacity_exits_4(self, tmp_path):
        text = UNS_IMAGING.format(N=1).replace("count = 2", "count = 17")
        assert main(["--out", str(tmp_path), "run", write(tmp_path, text)]) == 4

    @pytest.mark.parametrize("edit", [
        ('family = "UNS"', 'family = "Cat"'),
        ('kind = "EstimatePhi"', 'kind = "Guess"'),
        ("N = 1\n", 'N = "one"\n'),
        ("N = 1\n", ""),
        ('sensor = "mode"', 'sensor = "spin"'),
        ("[output]", "bogus = 1\n[output]"),
        ("count = 2", "count = "),
    ])
    def test_schema_errors_exit_2(self, tmp_path, edit):
        text = UNS_IMAGING.format(N=1).replace(*edit)
        assert main(["--out", str(tmp_path), "run", write(tmp_path, text)]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["--out", str(tmp_path), "run", str(tmp_path / "nope.toml")]) == 2

    def test_usage_error(self):
        assert main(["frobnicate"]) == 2

    def test_byte_identical(self, tmp_path):
        path = write(tmp_path, UNS_IMAGING.format(N=2))
        outs = []
        for k in range(2):
            d = tmp_path / f"o{k}"
            main(["--out", str(d), "run", path])
            outs.append(((d / "uns.csv").read_bytes(), (d / "uns.json").read_bytes()))
        assert outs[0] == outs[1]

    def test_csv_format(self, tmp_path):
        main(["--out", str(tmp_path), "run", write(tmp_path, UNS_IMAGING.format(N=3))])
        raw = (tmp_path / "uns.csv").read_bytes()
        assert b"\r" not in raw
        assert raw.splitlines()[0] == b"quantity,value,formula_id,formula"
        report = json.loads((tmp_path / "uns.json").read_text())
        for r in rows(tmp_path / "uns.csv"):
            assert r["formula_id"] and r["formula"]
        # 17 significant digits round-trip exactly
        assert value(tmp_path / "uns.csv", "pipeline_crb") == report["crb"]


class TestVerify:
    @pytest.mark.parametrize("args", [
        ["matrix-inequalities", "--trials", "200", "--seed", "7"],
        ["surrogate", "--trials", "50"],
        ["bounds-crosscheck"],
        ["appendix-e", "--step", "1e-3"],
        ["conjecture-scan", "--trials", "2000"],
    ])
    def test_suites_pass(self, args, capsys):
        assert main(["verify"] + args) == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "failed=0" in out

    def test_unknown_suite(self):
        assert main(["verify", "everything"]) == 2


def read_table(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestTable:
    def test_gns_g(self, tmp_path):
        assert main(["--out", str(tmp_path), "table", "gns-g"]) == 0
        g = [float(r["g_gns"]) for r in read_table(tmp_path / "gns-g.csv")]
        np.testing.assert_allclose(g[:3], [1, 4 / 3, 3 / 2], rtol=1e-12)
        assert np.all(np.diff(g) > 0) and g[-1] < 2

    def test_appendix_e_interior_minimum(self, tmp_path):
        assert main(["--out", str(tmp_path), "table", "appendix-e", "--sweep", "x=-0.9:0.9:0.01"]) == 0
        t = read_table(tmp_path / "appendix-e.csv")
        e = np.array([float(r["E"]) for r in t])
        j = int(np.argmin(e))
        assert 0 < j < len(e) - 1
        assert abs(float(t[j]["x"]) - float(t[0]["x_min"])) <= 0.01

    def test_enhancement_monotone(self, tmp_path):
        assert main(["--out", str(tmp_path), "table", "enhancement"]) == 0
        t = read_table(tmp_path / "enhancement.csv")
        l1 = np.array([float(r["l1_norm"]) for r in t])
        ratio = np.array([float(r["ghz_over_local"]) for r in t])
        assert np.all(np.diff(l1) > 0) and np.all(np.diff(ratio) < 0)

    def test_imaging_columns(self, tmp_path):
        assert main(["--out", str(tmp_path), "table", "imaging", "--param", "N=12", "--sweep", "d_prime=2:4:1"]) == 0
        t = read_table(tmp_path / "imaging.csv")
        for r in t:
            dp = int(r["d_prime"])
            assert float(r["gns"]) == pytest.approx((dp + 1) / (2 * 144))
            assert float(r["uns"]) == pytest.approx((dp + 1) ** 2 / (4 * dp * 144))

    def test_ghz_local_ratio(self, tmp_path):
        assert main(["--out", str(tmp_path), "table", "ghz-local"]) == 0
        for r in read_table(tmp_path / "ghz-local.csv"):
            assert float(r["local_over_ghz"]) == pytest.approx(int(r["d"]))

    @pytest.mark.parametrize("sweep", ["d_prime=3:1:1", "d_prime=1:3:0", "d_prime=1:3", "x=1:3:1", "d_prime=0.5:2:0.5"])
    def test_bad_sweep(self, tmp_path, sweep):
        assert main(["--out", str(tmp_path), "table", "gns-g", "--sweep", sweep]) == 2

    def test_deterministic(self, tmp_path):
        main(["--out", str(tmp_path / "a"), "table", "imaging"])
        main(["--out", str(tmp_path / "b"), "table", "imaging"])
        assert (tmp_path / "a" / "imaging.csv").read_bytes() == (tmp_path / "b" / "imaging.csv").read_bytes()


def test_parse_sweep():
    key, vals = parse_sweep("x=0:1:0.25")
    assert key == "x"
    np.testing.assert_allclose(vals, [0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(SchemaError):
        parse_sweep("nonsense")


finite = st.floats(-10, 10, allow_nan=False)


@st.composite
def scenarios(draw):
    sensor = draw(st.sampled_from(config.SENSORS))
    count = draw(st.integers(1, 4))
    net = {"sensor": sensor, "count": count, "n_max": draw(st.integers(0, 4)),
           "fixed": draw(st.booleans()) if sensor == "qubits" else False,
           "references": draw(st.integers(0, 2))}
    family = draw(st.sampled_from(sorted(config.FAMILIES)))
    probe = {"family": family}
    for k in config.FAMILIES[family]:
        if k in ("n", "N"):
            probe[k] = draw(st.integers(1, 5))
        elif k in ("w", "v"):
            probe[k] = draw(st.lists(finite, min_size=1, max_size=4))
        elif k == "gamma":
            if draw(st.booleans()):
                probe[k] = draw(st.floats(0.1, 3))
        else:
            probe[k] = draw(st.lists(st.lists(finite, min_size=2, max_size=2), min_size=1, max_size=3))
    kind = draw(st.sampled_from(sorted(config.TASKS)))
    task = {"kind": kind}
    if kind == "SingleFunction":
        task["v"] = draw(st.lists(finite, min_size=1, max_size=4))
    else:
        if draw(st.booleans()):
            task["W"] = draw(st.lists(st.floats(0, 1), min_size=1, max_size=4))
        if kind == "LinearFunctions":
            task["M"] = draw(st.lists(st.lists(finite, min_size=2, max_size=2), min_size=2, max_size=2))
    stem = draw(st.text("abcxyz_-0123", min_size=1, max_size=8))
    return {"mu": draw(st.integers(1, 9)), "network": net, "probe": probe, "task": task, "output": {"stem": stem}}


@settings(max_examples=150, deadline=None)
@given(doc=scenarios())
def test_config_round_trip(doc):
    s = config.from_dict(doc)
    text = config.emit(s)
    assert config.emit(config.parse(text)) == text
    assert config.to_dict(config.parse(text)) == config.to_dict(s)


def test_default_document_parses():
    s = config.parse(config.__doc__.split("Example::")[1].split("Parsing")[0])
    assert s.probe.family == "GHZ" and s.task.kind == "SingleFunction"
