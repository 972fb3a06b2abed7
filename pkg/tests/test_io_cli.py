import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from marcsep import instances
from marcsep import io as mio
from marcsep.cli import EXIT_CAP, EXIT_PARSE, EXIT_VALIDATION, main
from marcsep.fading import FadingMarcConfig, ergodic_rate_closed_form
from marcsep.probability import FactoredInputDist, ValidationError
from marcsep.simulator import LinkModel, SchemeConfig


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


INDEPENDENT = {
    "alphabets": {"S1": ["0", "1"], "S2": ["0", "1"], "W": ["-"], "W3": ["-"]},
    "pmf": [0.25, 0.25, 0.25, 0.25],
}

PHASE = {
    "attenuations": {"a11": 1, "a21": 1, "a31": 1, "a13": 4, "a23": 4},
    "powers": [1, 1, 1],
    "kind": "phase",
}


# ---------------------------------------------------------------- schemas


def test_sources_roundtrip():
    src = instances.doubly_symmetric_sources(0.2, w="s1", w3="pair")
    back = mio.sources_from_dict(json.loads(json.dumps(mio.sources_to_dict(src))))
    np.testing.assert_array_equal(back.table, src.table)


def test_channel_and_inputs_roundtrip():
    ch = instances.asymmetric_channel()
    back = mio.channel_from_dict(mio.channel_to_dict(ch))
    np.testing.assert_array_equal(back.kernel, ch.kernel)
    fi = FactoredInputDist.uniform(ch.input_shape)
    fi2 = mio.inputs_from_dict(mio.inputs_to_dict(fi))
    np.testing.assert_array_equal(fi2.joint_inputs(), fi.joint_inputs())
    assert mio.inputs_from_dict("uniform", ch).input_shape == (4, 4, 2)


def test_fading_and_scheme_roundtrip():
    cfg = FadingMarcConfig(1, 2, 3, 4, 5, 1, 2, 3, kind="rayleigh")
    assert mio.fading_from_dict(mio.fading_to_dict(cfg)) == cfg
    scheme = SchemeConfig(
        instances.doubly_symmetric_sources(), m=8, relay_rates=(0.5, 0.5), dest_rates=(0.6, 0.4),
        link=LinkModel("capacity", capacities=(1, 1, 2, 1, 1, 2), kappa=1.5),
    )
    back = mio.scheme_from_dict(json.loads(json.dumps(mio.scheme_to_dict(scheme))))
    assert back.link == scheme.link and back.dest_rates == scheme.dest_rates


def test_schema_errors_name_the_field():
    with pytest.raises(ValidationError, match="pmf"):
        mio.sources_from_dict({"alphabets": INDEPENDENT["alphabets"], "pmf": [0.5, 0.5]})
    with pytest.raises(ValidationError, match="a23"):
        mio.fading_from_dict({"attenuations": {"a11": 1, "a21": 1, "a31": 1, "a13": 1}, "powers": [1, 1, 1]})
    with pytest.raises(ValidationError, match="preset"):
        mio.channel_from_dict({"preset": "mystery"})


def test_parse_error_has_line_and_column(tmp_path):
    path = write(tmp_path, "bad.json", '{\n  "pmf": [1,\n}')
    with pytest.raises(mio.ConfigError, match=r"bad\.json:3:1"):
        mio.load_json(path)


# ---------------------------------------------------------------- entropy


def test_cmd_entropy_independent_bits(tmp_path, capsys):
    code, out, _ = run(["entropy", write(tmp_path, "s.json", INDEPENDENT)], capsys)
    ent = json.loads(out)
    assert code == 0
    assert ent["dest_s1"] == pytest.approx(1.0) and ent["relay_s2"] == pytest.approx(1.0)


def test_cmd_entropy_side_information_copy(tmp_path, capsys):
    src = mio.sources_to_dict(instances.doubly_symmetric_sources(0.1, w="s1", w_noise=0.0, w3="const"))
    _, out, _ = run(["entropy", write(tmp_path, "s.json", src)], capsys)
    assert json.loads(out)["dest_s1"] == 0.0


def test_cmd_entropy_doubly_symmetric_csv(tmp_path, capsys):
    path = write(tmp_path, "s.json", {"sources": {"preset": "doubly_symmetric", "crossover": 0.1, "w": "const"}})
    _, out, _ = run(["entropy", path, "--csv"], capsys)
    row = next(csv.DictReader(io.StringIO(out)))
    assert float(row["dest_s1"]) == pytest.approx(0.46900, abs=5e-6)


# ---------------------------------------------------------------- region


def test_cmd_region_phase(tmp_path, capsys):
    _, out, _ = run(["region", write(tmp_path, "p.json", PHASE), "--model", "phase"], capsys)
    rep = json.loads(out)
    assert rep["conditions_hold"] is True
    r = rep["region"]
    assert (r["c1"], r["c2"], r["csum"]) == pytest.approx((1.58496, 1.58496, 2.0), abs=5e-6)


def test_cmd_region_zero_power(tmp_path, capsys):
    cfg = dict(PHASE, powers=[0, 0, 0])
    _, out, _ = run(["region", write(tmp_path, "p.json", cfg), "--model", "phase"], capsys)
    r = json.loads(out)["region"]
    assert (r["c1"], r["c2"], r["csum"]) == (0.0, 0.0, 0.0)


def test_cmd_region_rayleigh_single_link(tmp_path, capsys):
    cfg = {"attenuations": {"a11": 1, "a21": 0, "a31": 0, "a13": 1, "a23": 1}, "powers": [1, 1, 1]}
    path = write(tmp_path, "r.json", cfg)
    _, out, _ = run(["region", path, "--model", "rayleigh", "--samples", "200000", "--seed", "1"], capsys)
    mc = json.loads(out)["monte_carlo"]["c1"]
    assert abs(mc["mean"] - ergodic_rate_closed_form(1.0)) <= mc["half_width_95"]
    assert mc["sample_count"] == 200000


def test_cmd_region_sweep_csv(tmp_path, capsys):
    cfg = dict(PHASE, sweep={"param": "a13", "values": [0.5, 1.0, 4.0]},
               sources={"preset": "doubly_symmetric"})
    _, out, _ = run(["region", write(tmp_path, "p.json", cfg), "--model", "phase", "--csv"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["a13"] for r in rows] == ["0.5", "1.0", "4.0"]
    assert [r["conditions_hold"] for r in rows] == ["False", "False", "True"]
    assert "kappa_star" in rows[0]


def test_cmd_region_dm(tmp_path, capsys):
    cfg = {
        "sources": {"preset": "doubly_symmetric", "w3": "const"},
        "channel": {"preset": "asymmetric"},
        "input": "uniform",
    }
    path = write(tmp_path, "dm.json", cfg)
    _, out, _ = run(["region", path, "--scenario", "mabrc"], capsys)
    rep = json.loads(out)
    assert rep["irregular"]["kappa_star"] < rep["regular"]["kappa_star"]
    assert rep["kappa_star"] == rep["irregular"]["kappa_star"]
    _, out, _ = run(["region", path, "--csv"], capsys)
    assert [r["report"] for r in csv.DictReader(io.StringIO(out))] == ["irregular", "regular"]


def test_cmd_region_dm_search(tmp_path, capsys):
    cfg = {
        "sources": {"preset": "doubly_symmetric", "w": "const", "w3": "const"},
        "channel": {"preset": "identity"},
        "input_pmf": np.full((2, 2, 2), 0.125).tolist(),
        "budget": 2,
    }
    _, out, _ = run(["region", write(tmp_path, "dm.json", cfg), "--search"], capsys)
    rep = json.loads(out)
    assert rep["converse"]["necessary"] is True
    assert rep["converse_search"]["kappa"] <= rep["converse"]["kappa_star"] + 1e-12


# ---------------------------------------------------------------- simulation


def scheme(delta, m=10):
    return {
        "sources": {"preset": "doubly_symmetric", "crossover": 0.1, "w": "s2", "w3": "pair"},
        "m": m, "relay_rates": [0, 0],
        "dest_rates": [max(0.46899559 + delta, 0), max(0.25791414 + delta, 0)],
        "decoder": "map",
    }


def test_cmd_simulate_above_and_below(tmp_path, capsys):
    _, out, _ = run(["simulate", write(tmp_path, "a.json", scheme(0.7)), "--trials", "100"], capsys)
    assert json.loads(out)["destination_error_rate"] <= 0.05
    _, out, _ = run(["simulate", write(tmp_path, "b.json", scheme(-0.3)), "--trials", "100"], capsys)
    assert json.loads(out)["destination_error_rate"] >= 0.5


def test_cmd_simulate_constant_sources(tmp_path, capsys):
    cfg = {"sources": {"alphabets": {"S1": 1, "S2": 1, "W": 1, "W3": 1}, "pmf": [1.0]},
           "m": 12, "relay_rates": [0, 0], "dest_rates": [0, 0]}
    _, out, _ = run(["simulate", write(tmp_path, "c.json", cfg), "--trials", "10", "--csv"], capsys)
    assert next(csv.DictReader(io.StringIO(out)))["destination_error_rate"] == "0.0"


def test_cmd_sweep_csv_columns(tmp_path, capsys):
    cfg = dict(scheme(0.3, m=8), sweep={"param": "R1d", "rates": [0.2, 0.8]})
    _, out, _ = run(["sweep", write(tmp_path, "s.json", cfg), "--trials", "20", "--csv"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["rate", "errors", "trials", "margin", "error_rate"]
    assert len(rows) == 2


def test_cmd_compare_encoding(tmp_path, capsys):
    cfg = {"sources": {"preset": "doubly_symmetric", "w": "s2", "w3": "pair"},
           "m": 8, "margins": [0.3, 0.6, 0.9, 1.2], "decoder": "map"}
    _, out, _ = run(["compare-encoding", write(tmp_path, "c.json", cfg), "--trials", "40"], capsys)
    rep = json.loads(out)
    assert {"irregular_budget", "regular_budget", "advantage"} <= set(rep)


# ---------------------------------------------------------------- plumbing


def test_manifest_digest_stable(tmp_path, capsys):
    path = write(tmp_path, "a.json", scheme(0.3, m=8))
    digests = []
    for threads in ("1", "3"):
        man = tmp_path / f"m{threads}.json"
        run(["simulate", path, "--trials", "30", "--seed", "9", "--threads", threads,
             "--manifest", str(man)], capsys)
        m = json.loads(man.read_text())
        assert m["version"] == "0.1.0" and m["seed"] == 9 and m["subcommand"] == "simulate"
        assert m["wall_time_s"] >= 0
        digests.append(m["output_sha256"])
    assert digests[0] == digests[1]


def test_exit_codes(tmp_path, capsys):
    code, out, err = run(["entropy", write(tmp_path, "bad.json", "{oops")], capsys)
    assert code == EXIT_PARSE and out == "" and "bad.json:1:2" in err
    bad_pmf = dict(INDEPENDENT, pmf=[0.5, 0.5, 0.5, 0.5])
    code, _, err = run(["entropy", write(tmp_path, "v.json", bad_pmf)], capsys)
    assert code == EXIT_VALIDATION and "total mass 2 is not 1" in err
    code, _, _ = run(["simulate", write(tmp_path, "cap.json", scheme(0.3, m=13))], capsys)
    assert code == EXIT_CAP
    code, _, _ = run(["entropy", str(tmp_path / "missing.json")], capsys)
    assert code == EXIT_PARSE


def test_output_file_option(tmp_path, capsys):
    dest = tmp_path / "out.json"
    code, out, _ = run(["entropy", write(tmp_path, "s.json", INDEPENDENT), "-o", str(dest)], capsys)
    assert code == 0 and out == ""
    assert json.loads(dest.read_text())["dest_s1s2"] == pytest.approx(2.0)


def test_module_entry_point(tmp_path):
    path = write(tmp_path, "s.json", INDEPENDENT)
    res = subprocess.run([sys.executable, "-m", "marcsep", "entropy", path],
                         capture_output=True, text=True, check=True)
    assert math.isclose(json.loads(res.stdout)["relay_s1s2"], 2.0)
