import json
from pathlib import Path

import pytest

from gapforge.cli import main

REFERENCE_CONFIG = {
    "group": "Z2",
    "chamber_size": 8,
    "port_width": 1,
    "neck_length": 2,
    "epsilon": 0.1,
    "dual_points": 8,
    "k_max": 6,
    "gap_target": 2,
    "seed": 0,
    "check_samples": 8,
    "support_radius": 2,
}


def write_config(tmp_path, overrides=None, name="config.json"):
    cfg = dict(REFERENCE_CONFIG)
    cfg.update(overrides or {})
    path = tmp_path / name
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


def test_malformed_json_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    assert main(["spectrum", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_unknown_key_exits_2(tmp_path):
    cfg = write_config(tmp_path, {"chamber": 8})
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_k_max_too_large_exits_2(tmp_path):
    cfg = write_config(tmp_path, {"k_max": 500})
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_missing_epsilon_exits_2(tmp_path):
    cfg = dict(REFERENCE_CONFIG)
    del cfg["epsilon"]
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    assert main(["certify", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_r_mismatch_exits_2(tmp_path):
    cfg = write_config(tmp_path, {"r": 3})
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_spectrum_writes_ascending_csv(tmp_path):
    cfg = write_config(tmp_path, {"group": "Z1", "chamber_size": 4, "dual_points": 4,
                                  "k_max": 3})
    out = tmp_path / "out"
    assert main(["spectrum", "--config", cfg, "--out", str(out)]) == 0
    rows = (out / "spectra.csv").read_text().strip().splitlines()
    assert rows[0] == "z_id,condition,m,eigenvalue"
    by_series = {}
    for row in rows[1:]:
        z_id, condition, m, value = row.split(",")
        by_series.setdefault((z_id, condition), []).append(float(value))
    for series in by_series.values():
        assert series == sorted(series)
    assert ("-1", "dirichlet") in by_series
    assert ("0", "equivariant") in by_series


def test_spectrum_deterministic_bytes(tmp_path):
    cfg = write_config(tmp_path)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["spectrum", "--config", cfg, "--out", str(out_a)]) == 0
    assert main(["spectrum", "--config", cfg, "--out", str(out_b)]) == 0
    assert (out_a / "spectra.csv").read_bytes() == (out_b / "spectra.csv").read_bytes()


def test_certify_exit_codes_follow_gap_count(tmp_path):
    # frozen oracle: reference domain has 4 gaps at eps=0.01, 1 gap at eps=1.0
    out = tmp_path / "o1"
    cfg = write_config(tmp_path, {"epsilon": 0.01, "gap_target": 2}, name="a.json")
    assert main(["certify", "--config", cfg, "--out", str(out)]) == 0
    doc = json.loads((out / "gaps.json").read_text())
    assert doc["certified"] and doc["gap_count"] == 4
    cfg = write_config(tmp_path, {"epsilon": 1.0, "gap_target": 2}, name="b.json")
    assert main(["certify", "--config", cfg, "--out", str(out)]) == 1
    doc = json.loads((out / "gaps.json").read_text())
    assert doc["gap_count"] == 1 and not doc["certified"]


def test_certify_reports_witnesses_inside_intervals(tmp_path):
    out = tmp_path / "o"
    cfg = write_config(tmp_path)
    assert main(["certify", "--config", cfg, "--out", str(out)]) == 0
    doc = json.loads((out / "gaps.json").read_text())
    assert len(doc["witnesses"]) == 6
    assert doc["union_max_violation"] is not None
    assert float(doc["union_max_violation"]) <= 1e-8


def test_sweep_outputs(tmp_path):
    cfg = write_config(tmp_path, {"epsilon_grid": [1.0, 0.5, 0.1, 0.01]})
    out = tmp_path / "sw"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    rows = (out / "sweep.csv").read_text().strip().splitlines()
    assert rows[0] == "epsilon,k,I_k_left,I_k_right,gap_after_k"
    assert len(rows) == 1 + 4 * 6
    for row in rows[1:]:
        assert row.split(",")[4] in ("0", "1")
    doc = json.loads((out / "sweep.json").read_text())
    assert float(doc["threshold_epsilon"]) == 0.5
    for idx in range(4):
        assert (out / f"bands_{idx:03d}.csv").exists()


def test_check_passes_reference(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "chk"
    assert main(["check", "--config", cfg, "--out", str(out)]) == 0
    doc = json.loads((out / "checks.json").read_text())
    names = {c["name"] for c in doc["checks"]}
    assert names == {"plancherel", "interlacing", "union_inclusion",
                     "parseval", "intertwining", "energy_identity"}
    assert all(c["passed"] for c in doc["checks"])


def test_check_non_abelian_skips_transform(tmp_path):
    cfg = write_config(tmp_path, {"group": "inf-dihedral", "check_samples": 4})
    out = tmp_path / "chk2"
    assert main(["check", "--config", cfg, "--out", str(out)]) == 0
    doc = json.loads((out / "checks.json").read_text())
    skipped = {c["name"] for c in doc["checks"] if c["skipped"]}
    assert skipped == {"parseval", "intertwining", "energy_identity"}


def test_check_zero_tolerance_fails(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["check", "--config", cfg, "--out", str(tmp_path / "t0"),
                 "--tol", "0"]) == 1


def test_export_domain_roundtrip(tmp_path):
    from gapforge import domain_from_json, validate_domain
    cfg = write_config(tmp_path)
    out = tmp_path / "exp"
    assert main(["export-domain", "--config", cfg, "--out", str(out)]) == 0
    back = domain_from_json((out / "domain.json").read_text())
    assert back.vertex_count == 72
    assert validate_domain(back).ok


def test_jobs_parallel_matches_serial(tmp_path):
    cfg = write_config(tmp_path)
    out_s, out_p = tmp_path / "ser", tmp_path / "par"
    assert main(["spectrum", "--config", cfg, "--out", str(out_s), "--jobs", "1"]) == 0
    assert main(["spectrum", "--config", cfg, "--out", str(out_p), "--jobs", "4"]) == 0
    assert (out_s / "spectra.csv").read_bytes() == (out_p / "spectra.csv").read_bytes()
