"""CLI tests: subcommand outputs, profile loading, sweeps, exit codes."""

import json
import math

import pytest

from aseplan.cli import SweepRequest, load_profile, main
from aseplan.energy_planner import dbm_to_watts
from aseplan.numerics import DomainError


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, dict(
        line.split("=", 1) for line in out.strip().splitlines()
        if "=" in line and not line.startswith("#"))


class TestPointCommands:
    def test_gapa(self, capsys):
        code, kv = run(capsys, "gapa", "--alpha", "4")
        assert code == 0
        assert float(kv["u_star"]) == pytest.approx(0.5913, abs=1e-3)
        assert float(kv["gapa"]) == pytest.approx(0.8165, abs=1e-3)

    def test_rate_and_lower_bound(self, capsys):
        code, kv = run(capsys, "rate", "--m", "8", "--k", "4")
        assert code == 0
        assert float(kv["mean_rate"]) == pytest.approx(1.7252778, rel=1e-6)
        assert kv["is_lower_bound"] == "False"
        code, kv = run(capsys, "rate", "--m", "8", "--k", "4", "--lower-bound")
        assert code == 0
        assert float(kv["mean_rate"]) < 1.7252778

    def test_ase(self, capsys):
        code, kv = run(capsys, "ase", "--lambda-b", "2", "--m", "10", "--k", "6")
        assert code == 0
        assert float(kv["ase"]) == pytest.approx(
            2 * 6 * 1.4661374622925520, rel=1e-6)

    def test_optimal_k(self, capsys):
        code, kv = run(capsys, "optimal-k", "--m", "10")
        assert code == 0 and kv["k_star"] == "6"
        code, kv = run(capsys, "optimal-k", "--m", "10", "--method", "lower-bound")
        assert code == 0 and kv["k_star"] == "6"

    def test_simulate_and_samples(self, capsys, tmp_path):
        path = tmp_path / "s.csv"
        code, kv = run(capsys, "simulate", "--m", "2", "--k", "1",
                       "--trials", "60", "--radius", "10", "--seed", "5",
                       "--samples-csv", str(path))
        assert code == 0
        assert float(kv["mean_rate"]) > 0
        assert int(kv["trials_used"]) == 60
        assert path.exists()
        assert "sir_q50" in kv

    def test_plan_optimal_quick(self, capsys):
        code, kv = run(capsys, "plan", "--profile", "pico", "--target", "10",
                       "--k-max", "8", "--m-max", "64")
        assert code == 0
        assert (kv["m_star"], kv["k_star"]) == ("5", "2")
        assert kv["method"] == "optimal"
        assert float(kv["nec"]) > 0

    def test_plan_sub_quick(self, capsys):
        code, kv = run(capsys, "plan-sub", "--profile", "pico",
                       "--target", "10", "--alpha", "4")
        assert code == 0
        assert (kv["m_star"], kv["k_star"]) == ("6", "2")
        assert kv["converged"] == "True"
        assert int(kv["iterations"]) < 5

    def test_baseline(self, capsys):
        code, kv = run(capsys, "baseline", "--profile", "pico",
                       "--target", "10", "--kind", "single_antenna")
        assert code == 0
        assert (kv["m_star"], kv["k_star"]) == ("1", "1")


class TestExitCodes:
    def test_domain_error_is_one(self, capsys):
        assert main(["rate", "--m", "2", "--k", "5"]) == 1

    def test_usage_error_is_one(self, capsys):
        assert main(["rate", "--bogus-flag", "1"]) == 1
        assert main(["not-a-command"]) == 1

    def test_unknown_profile_is_one(self, capsys):
        assert main(["plan", "--profile", "nope", "--target", "1"]) == 1

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0


class TestLoadProfile:
    def test_builtins(self):
        macro = load_profile("macro")
        assert macro.p_watts == pytest.approx(dbm_to_watts(54.0), rel=1e-12)
        assert macro.eta == 0.388
        pico = load_profile("pico")
        assert (pico.pc, pico.ppre, pico.p0) == (6.8, 1.74, 1.5)

    def test_file_with_dbm(self, tmp_path):
        f = tmp_path / "p.cfg"
        f.write_text("# custom site\np_dbm = 40\neta = 0.3\npc = 5.0\n"
                     "ppre = 1.0\np0 = 8.0\n")
        prof = load_profile(str(f))
        assert prof.p_watts == pytest.approx(10.0, rel=1e-12)
        assert prof.eta == 0.3

    def test_file_with_watts(self, tmp_path):
        f = tmp_path / "p.cfg"
        f.write_text("p_watts=12\neta=0.5\npc=3\nppre=0.5\np0=2\n")
        assert load_profile(str(f)).p_watts == 12.0

    @pytest.mark.parametrize("body", [
        "p_dbm=40\np_watts=10\neta=0.5\npc=3\nppre=1\np0=2\n",   # both powers
        "eta=0.5\npc=3\nppre=1\np0=2\n",                          # no power
        "p_dbm=40\neta=0.5\npc=3\nppre=1\n",                      # missing p0
        "p_dbm=40\neta=0.5\npc=3\nppre=1\np0=2\nfoo=1\n",         # unknown key
        "p_dbm=40\neta=0.5\npc=3\nppre=1\np0=2\neta=0.6\n",       # duplicate
        "p_dbm=40\neta=1.5\npc=3\nppre=1\np0=2\n",                # eta > 1
        "p_dbm=40\neta=abc\npc=3\nppre=1\np0=2\n",                # non-numeric
    ])
    def test_invalid_files(self, tmp_path, body):
        f = tmp_path / "p.cfg"
        f.write_text(body)
        with pytest.raises(DomainError):
            load_profile(str(f))

    def test_missing_path(self):
        with pytest.raises(DomainError):
            load_profile("/no/such/file.cfg")


class TestSweep:
    def test_ase_lb_over_k_unimodal(self, capsys):
        code = main(["sweep", "--quantity", "ase_lb", "--axis", "K",
                     "--range", "1:10:1",
                     "--fixed", "M=10,alpha=4,lambda_b=1"])
        assert code == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert out[0].startswith("#")
        assert "quantity=ase_lb" in out[0] and "units=" in out[0]
        assert "M=10" in out[0]
        assert out[1] == "K,ase_lb"
        rows = [tuple(map(float, line.split(","))) for line in out[2:]]
        assert len(rows) == 10
        values = [v for _, v in rows]
        peak = values.index(max(values)) + 1
        assert peak == 6
        diffs = [b - a for a, b in zip(values, values[1:])]
        flips = sum(1 for a, b in zip(diffs, diffs[1:]) if a > 0 > b)
        assert flips == 1

    def test_output_file_idempotent(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("ASEPLAN_OUTPUT_DIR", str(tmp_path))
        argv = ["sweep", "--quantity", "rate_lb", "--axis", "u",
                "--range", "0.2:0.8:0.2", "--fixed", "alpha=4",
                "--output", "sweep.csv"]
        assert main(argv) == 0
        first = (tmp_path / "sweep.csv").read_bytes()
        assert main(argv) == 0
        assert (tmp_path / "sweep.csv").read_bytes() == first
        text = first.decode()
        assert text.splitlines()[1] == "u,rate_lb"
        assert len(text.splitlines()) == 2 + 4

    def test_json_format(self, capsys):
        code = main(["sweep", "--quantity", "rate_exact", "--axis", "M",
                     "--range", "4:8:2", "--fixed", "K=2,alpha=4",
                     "--format", "json"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["quantity"] == "rate_exact"
        assert doc["units"] == "nats/s/Hz"
        assert [p["M"] for p in doc["points"]] == [4.0, 6.0, 8.0]
        assert all(p["value"] > 0 for p in doc["points"])

    def test_nec_axis_restriction(self, capsys):
        assert main(["sweep", "--quantity", "nec", "--axis", "K",
                     "--range", "1:3:1", "--fixed", "profile=pico"]) == 1

    def test_nec_baseline_sweep_linear(self, capsys):
        code = main(["sweep", "--quantity", "nec", "--axis", "t_target",
                     "--range", "1:3:1",
                     "--fixed", "profile=pico,method=single_antenna"])
        assert code == 0
        rows = [line.split(",") for line in
                capsys.readouterr().out.strip().splitlines()[2:]]
        necs = [float(v) for _, v in rows]
        assert necs[1] == pytest.approx(2 * necs[0], rel=1e-9)
        assert necs[2] == pytest.approx(3 * necs[0], rel=1e-9)

    def test_request_validation(self):
        with pytest.raises(DomainError):
            SweepRequest(quantity="nope", axis="K", start=1, stop=2, step=1)
        with pytest.raises(DomainError):
            SweepRequest(quantity="rate_lb", axis="w", start=1, stop=2, step=1)
        with pytest.raises(DomainError):
            SweepRequest(quantity="rate_lb", axis="K", start=2, stop=1, step=1)
        with pytest.raises(DomainError):
            SweepRequest(quantity="rate_lb", axis="K", start=1, stop=2, step=0)

    def test_missing_fixed_parameter_is_domain_error(self, capsys):
        assert main(["sweep", "--quantity", "rate_exact", "--axis", "K",
                     "--range", "1:3:1", "--fixed", "alpha=4"]) == 1

    def test_bad_range_syntax(self, capsys):
        assert main(["sweep", "--quantity", "rate_lb", "--axis", "u",
                     "--range", "1-2-3", "--fixed", "alpha=4"]) == 1
