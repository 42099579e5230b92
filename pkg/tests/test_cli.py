"""Command-line interface tests.

Every run goes through ``main(argv)`` with captured stdout — the same
code path as the console script, minus the process spawn.  Reports are
pinned as line goldens with the ``# duration-ms`` trailer stripped, so
these double as a determinism check.
"""

import re

import numpy as np
import pytest

from bsgate import cli
from bsgate.charts import parse_grid, sample_annulus, sample_box, print_grid
from bsgate.cli import main
from bsgate.parser import parse_complex
from bsgate.surface import validate

from conftest import FIXTURES, fixture_text

TRAILER = re.compile(r"^# duration-ms \d+$")


def run(capsys, *argv):
    """Invoke the CLI, return (exit code, report lines minus trailer)."""
    code = main(list(argv))
    out = capsys.readouterr().out.rstrip("\n").split("\n")
    assert TRAILER.match(out[-1]), out[-1]
    return code, out[:-1]


def fx(name: str) -> str:
    return str(FIXTURES / name)


# -- exit-code contract ---------------------------------------------------


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "usage: bsgate" in capsys.readouterr().out


def test_no_arguments_is_a_usage_error(capsys):
    assert main([]) == 1
    assert "error: usage-error" in capsys.readouterr().err


def test_unknown_subcommand_is_a_usage_error(capsys):
    assert main(["frobnicate"]) == 1


def test_missing_input_file(capsys):
    code, lines = run(capsys, "validate", "/no/such/file.bsf")
    assert code == 1
    assert any(l.startswith("error: usage-error: cannot read") for l in lines)


def test_unparseable_input(capsys, tmp_path):
    p = tmp_path / "bad.bsf"
    p.write_text("surface x\nsector A genus -1 bwords 0\n")
    code, lines = run(capsys, "validate", str(p))
    assert code == 1
    assert any(l.startswith("error: parse-error") for l in lines)


def test_structural_violations_exit_two(capsys, tmp_path):
    # parseable, but the extra circle never shows up in a boundary word
    p = tmp_path / "loose.bsf"
    p.write_text(fixture_text("fix-split.bsf")
                 + "segment zz circle one O up L lo L\n")
    code, lines = run(capsys, "validate", str(p))
    assert code == 2
    assert "violations: 3" in lines
    assert sum(l.startswith("violation:") for l in lines) == 3


def test_domain_error_exits_two(capsys):
    # exiting through a lateral side is the canonical forbidden move
    code, lines = run(capsys, "split", "--sector", "Ao",
                      "--entry", "0:0:one", "--exit", "0:1:lo",
                      "--choice", "over", fx("fix-split.bsf"))
    assert code == 2
    assert any(l.startswith("error: bad-move") for l in lines)


def test_oracle_disagreement_exits_three(capsys, monkeypatch):
    # force the cross-check to "find" a witness the solver ruled out
    monkeypatch.setattr(cli, "brute_force", lambda system, bound: {"A": 1})
    code, lines = run(capsys, "detect", "--kind", "neg-tisc",
                      "--oracle-bound", "2", fx("fix-clean.bsf"))
    assert code == 3
    assert "oracle-agreement: fail" in lines
    assert any(l.startswith("error: oracle-disagreement") for l in lines)


def test_unverifiable_certificate_exits_three(capsys, monkeypatch):
    monkeypatch.setattr(cli, "verify_certificate", lambda s, c: False)
    code, lines = run(capsys, "detect", "--kind", "pos-tisc",
                      fx("fix-tdisc.bsf"))
    assert code == 3
    assert any(l.startswith("error: invariant-violation") for l in lines)


# -- report goldens -------------------------------------------------------


def test_validate_report(capsys):
    code, lines = run(capsys, "validate", fx("fix-split.bsf"))
    assert code == 0
    assert lines[0] == "bsgate-report validate"
    assert lines[1].startswith("version: ")
    assert re.fullmatch(r"input-sha256: [0-9a-f]{64}", lines[2])
    assert lines[3:] == ["name: fix-split", "sectors: 6", "segments: 4",
                         "double-points: 2", "violations: 0"]


def test_detect_feasible_report(capsys):
    code, lines = run(capsys, "detect", "--kind", "pos-tisc",
                      "--oracle-bound", "4", fx("fix-tdisc.bsf"))
    assert code == 0
    assert "feasible: true" in lines
    assert "w mw 1" in lines and "w sw 1" in lines
    assert "w ne 0" in lines
    # zero-slack constraints are named so the verdict can be audited
    assert "tight: seg:N" in lines
    assert lines[-2:] == ["oracle-witness: found", "oracle-agreement: ok"]


def test_detect_infeasible_report_carries_multipliers(capsys):
    code, lines = run(capsys, "detect", "--kind", "neg-tisc",
                      fx("fix-clean.bsf"))
    assert code == 0
    assert "feasible: false" in lines
    assert "multiplier seg:c1 1/1" in lines
    assert "multiplier seg:c2 1/1" in lines


def test_detect_criterion_passing(capsys):
    code, lines = run(capsys, "detect", "--kind", "criterion",
                      fx("fix-clean.bsf"))
    assert code == 0
    assert "passes: true" in lines
    assert "neg-tisc: infeasible" in lines
    assert "isc: infeasible" in lines
    assert lines[-1] == ("conclusion: fully carries a pure positive "
                         "contamination")


def test_detect_criterion_failing_names_the_leak(capsys):
    code, lines = run(capsys, "detect", "--kind", "criterion",
                      fx("fix-doc.bsf"))
    assert code == 0
    assert "passes: false" in lines
    assert "isc: feasible" in lines
    assert "w D 1" in lines
    assert not any(l.startswith("conclusion") for l in lines)


def test_assemble_report(capsys):
    code, lines = run(capsys, "assemble", "--kind", "pos-tisc",
                      "--weights", fx("fix-tdisc-pos.w"),
                      fx("fix-tdisc.bsf"))
    assert code == 0
    assert "components: 1" in lines
    assert "component 0 faces 2 euler 1 class PosTisc" in lines
    assert ("component 0 boundary corner:P:0:+ run:WP:1 corner:P2:0:+ "
            "run:SM2:1 run:SB:1 run:SM:1") in lines


def test_assemble_rejects_unbalanced_weights(capsys, tmp_path):
    p = tmp_path / "bumped.w"
    p.write_text("w mw 2\nw sw 1\n")
    code, lines = run(capsys, "assemble", "--kind", "pos-tisc",
                      "--weights", str(p), fx("fix-tdisc.bsf"))
    assert code == 2
    assert any(l.startswith("error: weights-not-satisfying") for l in lines)


def test_split_safe_report(capsys):
    code, lines = run(capsys, "split", "--sector", "A",
                      "--entry", "0:0:one", "--exit", "3:0:one",
                      "--choice", "safe", fx("fix-clean.bsf"))
    assert code == 0
    assert "criterion-preserved: true" in lines
    assert "choice: over" in lines
    assert "dp-left: L1 -" in lines
    assert "dp-right: R1 +" in lines
    assert any(l.startswith("convention:") for l in lines)
    assert "image A A_l1" in lines


def test_split_out_file_is_a_valid_complex(capsys, tmp_path):
    out = tmp_path / "after.bsf"
    code, lines = run(capsys, "split", "--sector", "A",
                      "--entry", "0:0:one", "--exit", "3:0:one",
                      "--choice", "under", "--out", str(out),
                      fx("fix-clean.bsf"))
    assert code == 0
    assert f"out: {out}" in lines
    cx = parse_complex(out.read_text())
    assert validate(cx).ok()
    code2, _ = run(capsys, "validate", str(out))
    assert code2 == 0


def test_schedule_report(capsys):
    code, lines = run(capsys, "schedule", "--plan", fx("clean3.plan"),
                      fx("fix-clean3.bsf"))
    assert code == 0
    assert "steps: 3" in lines
    assert "step 0 sector A choice over" in lines
    assert "step 2 sector A_l1_l2 choice over" in lines
    assert "final-sectors: 6" in lines
    assert "final-double-points: 6" in lines
    assert lines[-1] == "criterion: passes"


def test_schedule_rejects_short_plan_rows(capsys, tmp_path):
    p = tmp_path / "short.plan"
    p.write_text("A 0:0:one\n")
    code, lines = run(capsys, "schedule", "--plan", str(p),
                      fx("fix-clean.bsf"))
    assert code == 1
    assert any("plan rows need" in l for l in lines)


# -- chart subcommands ----------------------------------------------------


@pytest.fixture
def box_path(tmp_path):
    grid = sample_box(lambda x, y, z: -1.0 - y, (9, 9, 9))
    p = tmp_path / "box.grid"
    p.write_text(print_grid(grid))
    return str(p)


@pytest.fixture
def annulus_path(tmp_path):
    ann = sample_annulus(lambda t, z: -0.1 * (1.0 - z * z), (8, 17))
    p = tmp_path / "ann.grid"
    p.write_text(print_grid(ann))
    return str(p)


def test_chart_check_box_report(capsys, box_path):
    code, lines = run(capsys, "chart", "check-box", box_path)
    assert code == 0
    assert "confoliation: true" in lines
    assert "contact-cells: 729/729" in lines
    assert "max-violation: 0" in lines
    assert "tol: 1.0000000000000001e-09" in lines


def test_chart_grid_flag_cross_checks_the_shape(capsys, box_path):
    code, lines = run(capsys, "chart", "check-box", box_path,
                      "--grid", "9,9,9")
    assert code == 0
    code, lines = run(capsys, "chart", "check-box", box_path,
                      "--grid", "65,65,65")
    assert code == 2
    assert any(l.startswith("error: chart-error") for l in lines)


def test_chart_purify_box_roundtrip(capsys, tmp_path):
    def staircase(x, y, z):
        return -1.0 - np.maximum(0.0, y - 0.5) ** 3

    p = tmp_path / "stair.grid"
    p.write_text(print_grid(sample_box(staircase, (33, 33, 33))))
    out = tmp_path / "pure.grid"
    code, lines = run(capsys, "chart", "purify-box", str(p),
                      "--y0", "0.5", "--y1", "0.75", "--delta", "0.25",
                      "--out", str(out))
    assert code == 0
    assert "confoliation: true" in lines
    grid = parse_grid(out.read_text())
    assert grid.shape == (33, 33, 33)


def test_chart_extend_grid_flag_sizes_the_output(capsys, annulus_path,
                                                 tmp_path):
    out = tmp_path / "cell.grid"
    code, lines = run(capsys, "chart", "extend", annulus_path,
                      "--r0", "0.5", "--grid", "33", "--out", str(out))
    assert code == 0
    assert "confoliation: true" in lines
    grid = parse_grid(out.read_text())
    assert grid.kind == "cylinder"
    assert grid.shape == (33, 8, 17)
    # full NX,NY,NZ form also accepted, but NY,NZ must match the input
    code, _ = run(capsys, "chart", "extend", annulus_path,
                  "--r0", "0.5", "--grid", "33,8,17")
    assert code == 0
    code, lines = run(capsys, "chart", "extend", annulus_path,
                      "--r0", "0.5", "--grid", "33,9,17")
    assert code == 2


def test_chart_holonomy_report(capsys, tmp_path):
    ann = sample_annulus(lambda t, z: -0.05 + 0.0 * t, (8, 9))
    p = tmp_path / "flat.grid"
    p.write_text(print_grid(ann))
    code, lines = run(capsys, "chart", "holonomy", str(p),
                      "--z0", "0", "--step", "1e-2")
    assert code == 0
    assert lines[-3] == ("convention: leaves follow dz/dtheta = f with "
                         "increasing theta")
    z1 = float(lines[-2].split(": ")[1])
    disp = float(lines[-1].split(": ")[1])
    assert z1 == pytest.approx(-0.05 * 2 * 3.141592653589793, abs=1e-9)
    assert disp == z1


# -- determinism and selftest ---------------------------------------------


@pytest.mark.parametrize("argv", [
    ("validate", "fix-split.bsf"),
    ("detect", "--kind", "criterion", "fix-clean.bsf"),
    ("detect", "--kind", "pos-tisc", "--oracle-bound", "3",
     "fix-tdisc.bsf"),
    ("assemble", "--kind", "isc", "--weights", "fix-doc-isc.w",
     "fix-doc.bsf"),
    ("split", "--sector", "A", "--entry", "0:0:one", "--exit", "3:0:one",
     "--choice", "neutral", "fix-clean.bsf"),
], ids=["validate", "criterion", "detect-oracle", "assemble", "split"])
def test_reports_are_deterministic(capsys, argv):
    argv = [fx(a) if a.startswith("fix-") or a.endswith(".plan") else a
            for a in argv]
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second


def test_selftest_reads_the_seed_base_from_the_environment(capsys,
                                                           monkeypatch):
    monkeypatch.setenv("BSGATE_SEED", "3")
    code, lines = run(capsys, "selftest", "--seeds", "2")
    assert code == 0
    assert "seed-base: 3" in lines
    assert "solver-runs: 6" in lines
    assert lines[-1] == "selftest: ok"
