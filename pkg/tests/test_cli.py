import json
import textwrap

import pytest

from y00lab import __version__
from y00lab.cli import main
from y00lab.keystream import KeystreamKind
from y00lab.scenario import GridTooLarge, ScenarioError, load_scenario, load_sweep

BASE = """
[protocol]
M = 16
alpha = 1.2732395447
osk = true
basis_keystream = lfsr
osk_keystream = lfsr

[key]
length = 12

[plaintext]
length = 512

[attack]
kind = exhaustive
known_plaintext = 12, 24

[run]
trials = 60
seed = 3
"""


def write(tmp_path, text, name="s.ini"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return p


class TestScenario:
    def test_parse(self, tmp_path):
        s = load_scenario(write(tmp_path, BASE))
        assert s.params.M == 16 and s.params.osk_enabled
        assert s.params.basis_kind == KeystreamKind.LFSR
        assert s.known_plaintext == (12, 24)
        assert len(s.source_hash) == 64

    def test_overrides_change_hash(self, tmp_path):
        path = write(tmp_path, BASE)
        a = load_scenario(path)
        b = load_scenario(path, {"seed": 9, "trials": None})
        assert b.seed == 9 and b.trials == a.trials
        assert a.source_hash != b.source_hash

    def test_seed_required(self, tmp_path):
        with pytest.raises(ScenarioError) as exc:
            load_scenario(write(tmp_path, BASE.replace("seed = 3", "")))
        assert exc.value.field == "run.seed"

    @pytest.mark.parametrize("old,new,field", [
        ("M = 16", "M = 12", "protocol"),
        ("alpha = 1.2732395447", "alpha = -1", "protocol"),
        ("kind = exhaustive", "kind = brute", "attack.kind"),
        ("length = 12", "length = 0", "key.length"),
        ("trials = 60", "trials = 0", "run.trials"),
        ("length = 512", "length = 512\nkind = file", "plaintext.path"),
    ])
    def test_field_errors(self, tmp_path, old, new, field):
        with pytest.raises(ScenarioError) as exc:
            load_scenario(write(tmp_path, BASE.replace(old, new)))
        assert exc.value.field.startswith(field)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError):
            load_scenario(tmp_path / "nope.ini")

    def test_lfsr_key_never_zero(self, tmp_path):
        text = BASE.replace("length = 12", "length = 8")
        for seed in range(40):
            s = load_scenario(write(tmp_path, text), {"seed": seed})
            assert s.key().to_int() != 0

    def test_pattern_plaintext(self, tmp_path):
        s = load_scenario(write(tmp_path, BASE.replace("length = 512", "kind = pattern\npattern = 011\nlength = 7")))
        assert s.plaintext_bits().tolist() == [0, 1, 1, 0, 1, 1, 0]

    def test_file_plaintext(self, tmp_path):
        (tmp_path / "pt.bin").write_bytes(b"\xf0")
        s = load_scenario(write(tmp_path, BASE.replace("length = 512", "kind = file\npath = pt.bin\nlength = 0")))
        assert s.plaintext_bits().tolist() == [1, 1, 1, 1, 0, 0, 0, 0]


class TestSweepSpec:
    def test_axes(self, tmp_path):
        spec = load_sweep(write(tmp_path, BASE + "[sweep]\nM = 4, 8\nalpha = 0.5, 1, 2\n"))
        assert spec.size() == 6
        pts = list(spec.points())
        assert pts[0][1].params.M == 4 and pts[-1][1].params.alpha_mag == 2.0

    def test_cap(self, tmp_path):
        with pytest.raises(GridTooLarge):
            load_sweep(write(tmp_path, BASE + "[sweep]\ncap = 2\nM = 4, 8, 16\n"))

    def test_unknown_axis(self, tmp_path):
        with pytest.raises(ScenarioError):
            load_sweep(write(tmp_path, BASE + "[sweep]\nbeta = 1, 2\n"))

    def test_bad_point(self, tmp_path):
        with pytest.raises(ScenarioError):
            load_sweep(write(tmp_path, BASE + "[sweep]\nM = 4, 6\n"))


def run(args):
    code = main([str(a) for a in args])
    return code


class TestCommands:
    def test_metrics(self, tmp_path, capsys):
        out = tmp_path / "o"
        assert run(["metrics", write(tmp_path, BASE), "--out-dir", out]) == 0
        doc = json.loads((out / "metrics.json").read_text())
        assert doc["provenance"]["version"] == __version__
        assert "chi_H_kpa" in capsys.readouterr().out

    def test_simulate(self, tmp_path):
        out = tmp_path / "o"
        text = BASE.replace("basis_keystream = lfsr", "basis_keystream = counter").replace(
            "osk_keystream = lfsr", "osk_keystream = counter")
        assert run(["simulate", write(tmp_path, text), "--out-dir", out]) == 0
        lines = (out / "transcript.csv").read_text().splitlines()
        assert lines[0].startswith(f"# y00lab {__version__} scenario_sha256=")
        assert lines[1] == "t,x,m,osk,xy00,j,theta,bob_bit"
        assert len(lines) == 2 + 512
        summ = json.loads((out / "simulate_summary.json").read_text())
        lo, hi = summ["ci95"]
        assert lo <= summ["bob_ber_empirical"] <= hi

    @pytest.mark.parametrize("kind", ["exhaustive", "key", "data"])
    def test_attack(self, tmp_path, kind):
        out = tmp_path / "o"
        assert run(["attack", write(tmp_path, BASE.replace("kind = exhaustive", f"kind = {kind}")),
                    "--out-dir", out, "--trials", 200]) == 0
        doc = json.loads((out / "attack.json").read_text())
        assert {"kind", "analytic", "empirical", "trials", "ci95", "params"} <= set(doc)
        assert doc["trials"] == 200
        assert (out / "attack.csv").read_text().startswith("# y00lab")

    def test_sweep_with_svg(self, tmp_path):
        out = tmp_path / "o"
        path = write(tmp_path, BASE + "[sweep]\nM = 4, 8\nosk = false, true\nsvg = true\n")
        assert run(["sweep", path, "--out-dir", out]) == 0
        rows = (out / "sweep.csv").read_text().splitlines()
        assert rows[1].split(",")[:3] == ["M", "osk", "chi_H_coa"]
        assert len(rows) == 2 + 4
        assert (out / "sweep.svg").read_text().lstrip().startswith("<?xml")

    def test_config_error_exit_code(self, tmp_path, capsys):
        assert run(["metrics", write(tmp_path, BASE.replace("M = 16", "M = 3"))]) == 2
        assert "protocol" in capsys.readouterr().err

    def test_key_space_exit_code(self, tmp_path):
        text = BASE.replace("length = 12", "length = 20")
        assert run(["attack", write(tmp_path, text), "--out-dir", tmp_path / "o"]) == 3

    def test_grid_cap_exit_code(self, tmp_path):
        assert run(["sweep", write(tmp_path, BASE + "[sweep]\ncap = 1\nM = 4, 8\n")]) == 3

    def test_counter_exhaustive_rejected(self, tmp_path):
        text = BASE.replace("basis_keystream = lfsr", "basis_keystream = counter")
        assert run(["attack", write(tmp_path, text), "--out-dir", tmp_path / "o"]) == 2

    def test_bad_threads(self, tmp_path):
        assert run(["metrics", write(tmp_path, BASE), "--threads", 0]) == 2
