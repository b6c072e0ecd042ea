import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from translume import __version__, cli
from translume.config import (
    RunConfig,
    SpectrumBlock,
    StimulatedBlock,
    SweepBlock,
    VacuumBlock,
    dump_config,
    parse_config,
)
from translume.errors import ConfigError, NoConvergence
from translume.grating import GratingConfig, find_horizons

THERMAL = """
[grating]
eps_b = 1.0
alpha = 0.05
g = 1.0
Omega = 1.0
d = 5*2pi
"""


def write_cfg(tmp_path: Path, body: str, name="run.ini") -> Path:
    path = tmp_path / name
    path.write_text(body)
    return path


def run(tmp_path, command, body, *extra, out="out"):
    cfg = write_cfg(tmp_path, body)
    return cli.main([command, "--config", str(cfg), "--out", str(tmp_path / out), *extra])


def read_csv(path: Path):
    lines = path.read_text().splitlines()
    assert lines[0] == f"# translume {__version__}"
    return lines[1].split(","), [row.split(",") for row in lines[2:]]


def body_of(path: Path) -> str:
    return "\n".join(path.read_text().splitlines()[1:])


class TestConfigParsing:
    def test_pi_multiples(self):
        cfg = parse_config(THERMAL)
        assert cfg.grating.d == pytest.approx(10 * math.pi)

    def test_error_names_line_and_key(self):
        text = "[grating]\nalpha = 0.05\ng = -2\n"
        with pytest.raises(ConfigError, match=r"run.ini:3: \[grating\] g"):
            parse_config(text, "run.ini")

    def test_unknown_key_line(self):
        with pytest.raises(ConfigError, match=r"<config>:4: \[rays\] cout"):
            parse_config("[grating]\nd = 1\n[rays]\ncout = 3\n")

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="unknown section"):
            parse_config("[plots]\ncolor = red\n")

    def test_non_numeric(self):
        with pytest.raises(ConfigError, match=r":2: \[spectrum\] n"):
            parse_config("[spectrum]\nn = one\n")

    def test_exit_frequency_must_be_negative(self):
        with pytest.raises(ConfigError, match="n_prime_max"):
            parse_config("[spectrum]\nn_prime_max = 1\n")

    def test_sweep_rejects_unknown_parameter(self):
        with pytest.raises(ConfigError, match=r":2: \[sweep\] hbar"):
            parse_config("[sweep]\nhbar = 1, 2\n")

    @settings(max_examples=60, suppress_health_check=[HealthCheck.too_slow])
    @given(
        eps_b=st.floats(1.0, 4.0),
        alpha_frac=st.floats(0.0, 0.49),
        g=st.floats(0.1, 5.0),
        Omega=st.floats(0.0, 5.0),
        d=st.floats(0.0, 100.0),
        k_frac=st.floats(0.01, 0.99),
        n=st.integers(0, 4),
        d_values=st.lists(st.floats(0.0, 80.0), max_size=4),
        fmt=st.sampled_from(["csv", "json"]),
        sweep=st.lists(st.floats(0.0, 60.0), min_size=1, max_size=3),
    )
    def test_round_trip(self, eps_b, alpha_frac, g, Omega, d, k_frac, n, d_values, fmt, sweep):
        grating = GratingConfig(eps_b=eps_b, alpha=alpha_frac * eps_b, g=g, Omega=Omega, d=d)
        k = k_frac * g
        cfg = RunConfig(
            grating=grating,
            spectrum=SpectrumBlock(k_tilde=k, n=n),
            vacuum=VacuumBlock(d_values=tuple(d_values), fit="tail"),
            stimulated=StimulatedBlock(k_tilde=k, n=n, probe=0.3),
            sweep=SweepBlock("pairs", (("d", tuple(sweep)),)),
        )
        cfg = replace(cfg, output=replace(cfg.output, format=fmt))
        assert parse_config(dump_config(cfg)) == cfg


class TestExitCodes:
    def test_success(self, tmp_path):
        assert run(tmp_path, "spectrum", THERMAL + "[spectrum]\nn_prime_min = -5\n") == 0

    def test_config_error(self, tmp_path, capsys):
        assert run(tmp_path, "spectrum", "[grating]\nalpha = 2.0\n") == 2
        assert "run.ini:2" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert cli.main(["rays", "--config", str(tmp_path / "none.ini")]) == 2

    def test_bad_command(self, tmp_path):
        assert cli.main(["plot", "--config", "x"]) == 2

    def test_numerical_failure(self, tmp_path, monkeypatch, capsys):
        def fail(*_, **__):
            raise NoConvergence("quadrature budget exhausted")

        monkeypatch.setattr(cli, "spectral_amplitude", fail)
        assert run(tmp_path, "spectrum", THERMAL) == 3
        assert "NoConvergence" in capsys.readouterr().err

    def test_horizons_required_but_absent(self, tmp_path):
        body = "[grating]\nOmega = 3.0\n[rays]\nrelative_to_horizons = true\n"
        assert run(tmp_path, "rays", body) == 2

    def test_empty_sweep(self, tmp_path, capsys):
        assert run(tmp_path, "sweep", THERMAL + "[sweep]\ntarget = hawking\n") == 2
        assert "usage:" in capsys.readouterr().err


class TestRays:
    def test_unmodulated_rays_are_straight(self, tmp_path):
        body = "[grating]\nalpha = 0.0\neps_b = 1.25\n[rays]\ncount = 3\nt_end = 20\n"
        assert run(tmp_path, "rays", body) == 0
        for i in range(3):
            cols, rows = read_csv(tmp_path / "out" / f"ray_{i:03d}.csv")
            assert cols == ["t", "x", "X"]
            t, x = np.array([[float(r[0]), float(r[1])] for r in rows]).T
            assert np.allclose(np.diff(x) / np.diff(t), 0.8, rtol=1e-9)
        cols, rows = read_csv(tmp_path / "out" / "horizons.csv")
        assert cols == ["X", "kind", "dcdX"] and rows == []

    def test_rays_gather_at_accumulation_horizon(self, tmp_path):
        body = THERMAL + "[rays]\ncount = 12\nt_end = 400\n"
        assert run(tmp_path, "rays", body) == 0
        cfg = GratingConfig(alpha=0.05)
        target = find_horizons(cfg).accumulation.X
        period = cfg.period
        start, end = [], []
        for i in range(12):
            _, rows = read_csv(tmp_path / "out" / f"ray_{i:03d}.csv")
            for store, row in ((start, rows[0]), (end, rows[-1])):
                offset = (float(row[2]) - target + period / 2) % period - period / 2
                store.append(abs(offset))
        assert np.median(end) < 0.1 * np.median(start)
        _, rows = read_csv(tmp_path / "out" / "horizons.csv")
        assert sorted(r[1] for r in rows) == ["Accumulation", "Dispersal"]


class TestSpectrum:
    def test_columns_and_meta(self, tmp_path):
        assert run(tmp_path, "spectrum", THERMAL + "[spectrum]\nn_prime_min = -4\n") == 0
        cols, rows = read_csv(tmp_path / "out" / "spectrum.csv")
        assert cols == ["n_prime", "reF", "imF", "absF2"]
        assert [int(r[0]) for r in rows] == [-1, -2, -3, -4]
        meta = json.loads((tmp_path / "out" / "spectrum_meta.json").read_text())
        assert meta["T_H"] == pytest.approx(0.25 * math.exp(math.pi), rel=1e-12)
        assert set(meta) >= {"gamma", "T_H", "version"}

    def test_floats_round_trip_exactly(self, tmp_path):
        assert run(tmp_path, "spectrum", THERMAL + "[spectrum]\nn_prime_min = -3\n") == 0
        _, rows = read_csv(tmp_path / "out" / "spectrum.csv")
        from translume.pulse import PulseModel, spectral_amplitude

        model = PulseModel(parse_config(THERMAL).grating)
        for r in rows:
            F = spectral_amplitude(model, 0.75, 1, int(r[0]))
            assert float(r[1]) == F.real and float(r[2]) == F.imag

    def test_json_format(self, tmp_path):
        assert run(tmp_path, "spectrum", THERMAL + "[spectrum]\nn_prime_min = -2\n", "--format", "json") == 0
        doc = json.loads((tmp_path / "out" / "spectrum.json").read_text())
        assert doc["version"] == __version__
        assert doc["columns"] == ["n_prime", "reF", "imF", "absF2"]
        assert len(doc["rows"]) == 2


class TestVacuum:
    def test_unmodulated_writes_zeros(self, tmp_path):
        body = "[grating]\nalpha = 0.0\nd = 10\n[vacuum]\npoints = 8\n"
        assert run(tmp_path, "vacuum", body) == 0
        cols, rows = read_csv(tmp_path / "out" / "vacuum_00.csv")
        assert cols == ["omega", "density"]
        assert all(float(r[1]) == 0.0 for r in rows)
        assert all(float(r[0]) % 1.0 != 0.0 for r in rows)
        cols, rows = read_csv(tmp_path / "out" / "vacuum_summary.csv")
        assert cols == ["index", "d", "T_fit", "T_H", "residual", "energy_per_period"]
        assert rows[0][2] == "nan"

    def test_one_file_per_length(self, tmp_path):
        body = THERMAL + "[vacuum]\nd_values = 3*2pi, 4*2pi, 5*2pi\npoints = 12\nperiods = 4\n"
        assert run(tmp_path, "vacuum", body) == 0
        out = tmp_path / "out"
        assert sorted(p.name for p in out.glob("vacuum_0*.csv")) == [
            "vacuum_00.csv", "vacuum_01.csv", "vacuum_02.csv"]
        _, rows = read_csv(out / "vacuum_summary.csv")
        assert [float(r[1]) for r in rows] == pytest.approx([6 * math.pi, 8 * math.pi, 10 * math.pi])
        T_fit = [float(r[2]) for r in rows]
        assert T_fit[0] < T_fit[1] < T_fit[2]


class TestStimulated:
    def test_summary_and_alias(self, tmp_path, capsys):
        body = "[grating]\nd = 20\n[stimulated]\nk_tilde = 0.75\nn = 1\n"
        assert run(tmp_path, "stimulated", body) == 0
        out = dict(line.split("=", 1) for line in capsys.readouterr().out.split())
        assert float(out["total_negative_fraction"]) == pytest.approx(0.007, abs=0.001)
        assert float(out["probe"]) == pytest.approx(1.75)
        assert float(out["positive_alias"]) == pytest.approx(0.75)
        assert float(out["negative_alias"]) == pytest.approx(0.25)
        assert out["degenerate_alias"] == "false"
        cols, _ = read_csv(tmp_path / "out" / "stimulated.csv")
        assert cols == ["n_prime", "fraction"]


SWEEP = "[grating]\nd = 20\n[sweep]\ntarget = stimulated\nd = 20, 40\nk_tilde = 0.5, 0.75\n"


class TestSweep:
    def test_reproduces_both_totals_in_order(self, tmp_path):
        assert run(tmp_path, "sweep", SWEEP) == 0
        cols, rows = read_csv(tmp_path / "out" / "sweep.csv")
        assert cols == ["d", "k_tilde", "stimulated"]
        assert [(float(r[0]), float(r[1])) for r in rows] == [(20, 0.5), (20, 0.75), (40, 0.5), (40, 0.75)]
        assert float(rows[1][2]) == pytest.approx(0.007, abs=0.001)
        assert float(rows[3][2]) == pytest.approx(0.044, abs=0.002)

    def test_independent_of_worker_count(self, tmp_path):
        assert run(tmp_path, "sweep", SWEEP, "--workers", "1", out="one") == 0
        assert run(tmp_path, "sweep", SWEEP, "--workers", "3", out="three") == 0
        assert (tmp_path / "one" / "sweep.csv").read_bytes() == (tmp_path / "three" / "sweep.csv").read_bytes()


class TestDeterminism:
    def test_identical_bodies(self, tmp_path):
        body = THERMAL + "[rays]\ncount = 2\nt_end = 30\n[spectrum]\nn_prime_min = -5\n"
        for out in ("a", "b"):
            assert run(tmp_path, "rays", body, out=out) == 0
            assert run(tmp_path, "spectrum", body, out=out) == 0
        names = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
        assert names
        for name in names:
            assert body_of(tmp_path / "a" / name) == body_of(tmp_path / "b" / name)


class TestWorkers:
    def test_flag_wins(self, monkeypatch):
        monkeypatch.setenv("TRANSLUME_WORKERS", "4")
        assert cli.resolve_workers(2) == 2

    def test_environment(self, monkeypatch):
        monkeypatch.setenv("TRANSLUME_WORKERS", "4")
        assert cli.resolve_workers(None) == 4
        monkeypatch.delenv("TRANSLUME_WORKERS")
        assert cli.resolve_workers(None) == 1

    def test_invalid(self, monkeypatch):
        monkeypatch.setenv("TRANSLUME_WORKERS", "many")
        with pytest.raises(ConfigError):
            cli.resolve_workers(None)
        with pytest.raises(ConfigError):
            cli.resolve_workers(0)
