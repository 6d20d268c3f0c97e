import json
import shutil
import subprocess

import pytest

from adq.xlab import REGISTRY, main
from adq.xlab.cli import render_csv
from adq.xlab.config import UsageError, coerce, format_value, parse_assignment, read_config_file, resolve

# small settings so that every experiment finishes in well under a second
SMALL = {
    "gamma-recovery": ["trials=5", "N_values=8,16"],
    "gamma-polys": ["trials=2", "grid=11"],
    "gre-stability-sweep": ["alpha_steps=3", "nu_values=0.0,0.3", "trials=4", "steps=200"],
    "quiet-map": ["rho_steps=2", "u0_steps=2", "burn_in=2000", "window=2000", "max_gap=20"],
    "orbit": ["steps=300"],
    "chaos-compare": ["steps=5000", "max_period=20"],
    "sd-accuracy": ["sd_ratios=8,16", "beta_bits=8,16", "pcm_bits=4,8"],
    "omp-cv": ["N=300", "m=120", "k=30", "d=10", "r_values=20", "realizations=5"],
    "jl-check": ["points=10", "N=50", "draws=10"],
    "adaptive-demo": ["N=200", "m=120", "k=10", "ladder=40,80", "sparse_d=3"],
}


def small_args(name, out, *extra):
    args = [name, "--out", str(out)]
    for item in SMALL[name]:
        args += ["--param", item]
    return args + list(extra)


def test_registry_is_complete():
    assert set(REGISTRY) == set(SMALL)
    assert sorted(e.ident for e in REGISTRY.values()) == list(range(1, 11))


@pytest.mark.parametrize("default, text, value", [
    (3, "7", 7), (0.5, "1e-3", 1e-3), (True, "no", False), ("a", " b ", "b"),
    ((8, 16), "4, 8,12", (4, 8, 12)), ((0.5,), "0.25", (0.25,)),
])
def test_coerce(default, text, value):
    assert coerce("k", text, default) == value


def test_coerce_errors():
    with pytest.raises(UsageError):
        coerce("k", "x", 3)
    with pytest.raises(UsageError):
        coerce("k", "maybe", False)
    with pytest.raises(UsageError):
        parse_assignment("novalue")
    with pytest.raises(UsageError):
        parse_assignment("=3")


def test_resolve_layers_and_unknown_keys():
    defaults = {"a": 1, "b": 2.0}
    assert resolve(defaults, [("a", "5")], [("a", "6"), ("b", "0.5")]) == {"a": 6, "b": 0.5}
    with pytest.raises(UsageError):
        resolve(defaults, [("c", "1")])


def test_format_value_round_trips():
    for v in (3, 0.1, True, (1, 2), (0.5, 0.25), "x"):
        assert coerce("k", format_value(v), v) == v


def test_config_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\n\ntrials = 3\nN_values=8,16\n")
    assert read_config_file(p) == [("trials", "3"), ("N_values", "8,16")]
    p.write_text("oops\n")
    with pytest.raises(UsageError):
        read_config_file(p)


def test_csv_rendering():
    text = render_csv(["a", "b", "c"], [(1, 0.1, True), (None, float("nan"), "x,y")])
    assert text == 'a,b,c\n1,0.1,1\n,nan,"x,y"\n'


def test_unknown_parameter_exit_code(tmp_path, capsys):
    assert main(["orbit", "--out", str(tmp_path), "--param", "bogus=1"]) == 2
    assert "unknown parameter" in capsys.readouterr().err


def test_bad_value_and_bad_experiment_exit_code(tmp_path):
    assert main(["orbit", "--out", str(tmp_path), "--param", "steps=many"]) == 2
    assert main(["nonsense", "--out", str(tmp_path)]) == 2
    assert main(["orbit"]) == 2


@pytest.mark.parametrize("name", sorted(SMALL))
def test_every_experiment_writes_outputs(name, tmp_path):
    assert main(small_args(name, tmp_path)) == 0
    csv_text = (tmp_path / f"{name}.csv").read_bytes()
    assert b"\r" not in csv_text and csv_text.count(b"\n") >= 2
    summary = json.loads((tmp_path / f"{name}.summary.json").read_text())
    assert summary["schema_version"] == 1 and summary["experiment"] == name
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert set(manifest["params"]) == set(REGISTRY[name].defaults)


@pytest.mark.parametrize("name", ["gamma-recovery", "omp-cv", "quiet-map", "orbit"])
def test_manifest_replay_is_byte_identical(name, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(small_args(name, first, "--seed", "11")) == 0
    assert main([name, "--manifest", str(first / "manifest.json"), "--out", str(second)]) == 0
    for suffix in (".csv", ".summary.json"):
        assert (first / f"{name}{suffix}").read_bytes() == (second / f"{name}{suffix}").read_bytes()
    assert (first / "manifest.json").read_bytes() == (second / "manifest.json").read_bytes()


def test_seed_changes_random_output(tmp_path):
    main(small_args("gamma-recovery", tmp_path / "a", "--seed", "1"))
    main(small_args("gamma-recovery", tmp_path / "b", "--seed", "2"))
    a = (tmp_path / "a" / "gamma-recovery.csv").read_text()
    b = (tmp_path / "b" / "gamma-recovery.csv").read_text()
    assert a != b


def test_config_then_param_precedence(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("steps = 100\nu0 = 0.5\n")
    main(["orbit", "--config", str(cfg), "--param", "steps=50", "--out", str(tmp_path)])
    params = json.loads((tmp_path / "manifest.json").read_text())["params"]
    assert params["steps"] == "50" and params["u0"] == "0.5"


def test_manifest_for_other_experiment_is_rejected(tmp_path):
    main(small_args("orbit", tmp_path))
    assert main(["gamma-polys", "--manifest", str(tmp_path / "manifest.json"), "--out", str(tmp_path)]) == 2


@pytest.mark.skipif(shutil.which("adq") is None, reason="console script not installed")
def test_console_script(tmp_path):
    done = subprocess.run(["adq", "orbit", "--param", "steps=20", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert done.returncode == 0 and (tmp_path / "orbit.csv").exists()
    bad = subprocess.run(["adq", "orbit", "--param", "nope=1", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert bad.returncode == 2
